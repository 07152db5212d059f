//! Closed-form fisheries quantities: SSB, recruitment and the Baranov
//! catch equation.

use crate::error::CoreError;
use crate::types::{AbundanceVector, BiologySeries};

/// Spawning stock biomass in tonnes: `sum_a weight * maturity * n`.
///
/// Abundance is in thousands and weight in kg, so the product is tonnes
/// without further conversion.
pub fn ssb(n: &AbundanceVector, bio: &BiologySeries) -> Result<f64, CoreError> {
    let weight = bio.weight_row(n.year())?;
    let maturity = bio.maturity_row(n.year())?;
    Ok(n.values()
        .iter()
        .zip(weight)
        .zip(maturity)
        .map(|((n_a, w), m)| n_a * w * m)
        .sum())
}

/// Recruitment: abundance at the minimum age, in thousands.
pub fn recruitment_of(n: &AbundanceVector) -> f64 {
    n.values()[0]
}

/// Baranov catch equation per age class:
/// `C_a = F_a / (F_a + M_a) * (1 - exp(-(F_a + M_a))) * n_a`.
///
/// `F_a + M_a == 0` yields zero catch.
pub fn baranov_catch(n: &[f64], fishing: &[f64], natural: &[f64]) -> Result<Vec<f64>, CoreError> {
    if n.len() != fishing.len() || n.len() != natural.len() {
        return Err(CoreError::InvalidValue(format!(
            "baranov inputs must share one length, got {}, {}, {}",
            n.len(),
            fishing.len(),
            natural.len()
        )));
    }
    for (label, xs) in [
        ("abundance", n),
        ("fishing mortality", fishing),
        ("natural mortality", natural),
    ] {
        if let Some(x) = xs.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(CoreError::InvalidValue(format!(
                "{label} must be non-negative, got {x}"
            )));
        }
    }
    Ok(n.iter()
        .zip(fishing)
        .zip(natural)
        .map(|((n_a, f_a), m_a)| {
            let z = f_a + m_a;
            if z == 0.0 {
                0.0
            } else {
                f_a / z * (1.0 - (-z).exp()) * n_a
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::AgeRange;
    use proptest::prelude::*;

    fn bio3(weight: Vec<f64>, maturity: Vec<f64>) -> BiologySeries {
        let ages = AgeRange::new(1, 3, false).unwrap();
        BiologySeries::constant(ages, 2000, 1, weight, maturity, vec![0.2; 3]).unwrap()
    }

    fn n3(values: Vec<f64>) -> AbundanceVector {
        AbundanceVector::new(2000, AgeRange::new(1, 3, false).unwrap(), values).unwrap()
    }

    #[test]
    fn ssb_zero_when_nothing_mature() {
        let bio = bio3(vec![1.0, 2.0, 3.0], vec![0.0, 0.0, 0.0]);
        assert_eq!(ssb(&n3(vec![10.0, 20.0, 30.0]), &bio).unwrap(), 0.0);
    }

    #[test]
    fn ssb_single_mature_age() {
        // 100 thousand fish of 2 kg, fully mature: 200 t.
        let bio = bio3(vec![1.0, 2.0, 1.0], vec![0.0, 1.0, 0.0]);
        assert_eq!(ssb(&n3(vec![50.0, 100.0, 7.0]), &bio).unwrap(), 200.0);
    }

    #[test]
    fn ssb_identity_case_sums_abundance() {
        let bio = bio3(vec![1.0, 1.0, 1.0], vec![1.0, 1.0, 1.0]);
        assert_eq!(ssb(&n3(vec![1.0, 2.0, 3.0]), &bio).unwrap(), 6.0);
    }

    #[test]
    fn ssb_missing_year_is_an_error() {
        let bio = bio3(vec![1.0; 3], vec![1.0; 3]);
        let n =
            AbundanceVector::new(1999, AgeRange::new(1, 3, false).unwrap(), vec![1.0; 3]).unwrap();
        assert!(matches!(
            ssb(&n, &bio),
            Err(CoreError::MissingYear { year: 1999, .. })
        ));
    }

    #[test]
    fn recruitment_is_min_age_abundance() {
        assert_eq!(recruitment_of(&n3(vec![5.0, 10.0, 20.0])), 5.0);
        assert_eq!(recruitment_of(&n3(vec![0.0, 0.0, 0.0])), 0.0);
    }

    #[test]
    fn baranov_zero_fishing_yields_zero_catch() {
        let c = baranov_catch(&[100.0, 50.0], &[0.0, 0.0], &[0.2, 0.2]).unwrap();
        assert_eq!(c, vec![0.0, 0.0]);
    }

    #[test]
    fn baranov_direct_arithmetic() {
        // F = M = 0.2: C = 0.5 * (1 - e^-0.4) * 1000.
        let c = baranov_catch(&[1000.0], &[0.2], &[0.2]).unwrap();
        let expected = 0.5 * (1.0 - (-0.4f64).exp()) * 1000.0;
        assert!((c[0] - expected).abs() < 1e-12);
        assert!((c[0] - 164.84).abs() < 0.005);
    }

    #[test]
    fn baranov_catch_approaches_abundance_for_huge_f() {
        let c = baranov_catch(&[1000.0], &[50.0], &[0.0]).unwrap();
        assert!((c[0] - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn baranov_rejects_negative_inputs() {
        assert!(baranov_catch(&[-1.0], &[0.1], &[0.1]).is_err());
        assert!(baranov_catch(&[1.0], &[-0.1], &[0.1]).is_err());
        assert!(baranov_catch(&[1.0], &[0.1], &[-0.1]).is_err());
    }

    proptest! {
        #[test]
        fn ssb_is_linear_in_abundance(
            ns in proptest::collection::vec(0.0f64..1e6, 3),
            alpha in 0.0f64..100.0,
        ) {
            let bio = bio3(vec![0.5, 1.0, 2.0], vec![0.1, 0.6, 1.0]);
            let base = ssb(&n3(ns.clone()), &bio).unwrap();
            let scaled = ssb(&n3(ns.iter().map(|v| v * alpha).collect()), &bio).unwrap();
            prop_assert!((scaled - alpha * base).abs() <= 1e-9 * base.abs().max(1.0) * alpha.max(1.0));
        }

        #[test]
        fn baranov_catch_bounded_by_total_deaths(
            n in proptest::collection::vec(0.0f64..1e6, 4),
            f in proptest::collection::vec(0.0f64..3.0, 4),
            m in 0.0f64..1.0,
        ) {
            let ms = vec![m; 4];
            let c = baranov_catch(&n, &f, &ms).unwrap();
            for i in 0..4 {
                let deaths = n[i] * (1.0 - (-(f[i] + m)).exp());
                prop_assert!(c[i] <= deaths + 1e-9);
            }
        }

        #[test]
        fn baranov_monotone_in_fishing(
            n in 1.0f64..1e6,
            f1 in 0.0f64..3.0,
            df in 0.0f64..2.0,
            m in 0.0f64..1.0,
        ) {
            let lo = baranov_catch(&[n], &[f1], &[m]).unwrap()[0];
            let hi = baranov_catch(&[n], &[f1 + df], &[m]).unwrap()[0];
            prop_assert!(hi + 1e-12 >= lo);
        }
    }
}
