//! Comparison metric and provisioning-based spectrum selection.
//!
//! The per-index distance between two magnitude responses `a`, `b` is
//!
//! ```text
//! d = 1 - 2 sqrt(a^2 b^2) / (a^2 + b^2) = (a - b)^2 / (a^2 + b^2)
//! ```
//!
//! (the right-hand form is the algebraic simplification for nonnegative
//! magnitudes; it is exact at the fixed points: 0 for equal inputs, 1 when
//! exactly one input is zero). The mean of `d` over the retained indices is
//! the mean normalized deviation (MND), the scalar tamper score.
//!
//! Spectrum selection drops the indices that fluctuated the most across a set
//! of known-legitimate provisioning responses: `alpha[k]` is the maximum
//! distance to the reference observed at index `k`, and the mask removes the
//! `floor(drop_fraction * L)` largest alphas.

use crate::error::{Error, Result};

/// Per-index normalized distance between two responses; every element lies
/// in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceVector {
    values: Vec<f64>,
}

impl DistanceVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Reference response fixed during provisioning.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceResponse {
    pub values: Vec<f64>,
    /// Simulation-clock capture time in seconds.
    pub captured_at: f64,
}

impl ReferenceResponse {
    pub fn new(values: Vec<f64>, captured_at: f64) -> Result<Self> {
        validate_magnitudes(&values)?;
        Ok(ReferenceResponse {
            values,
            captured_at,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn validate_magnitudes(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite() && *v >= 0.0) {
        Ok(())
    } else {
        Err(Error::Argument(
            "responses must contain finite magnitudes >= 0".into(),
        ))
    }
}

fn per_index_distance(a: f64, b: f64) -> f64 {
    let max = a.max(b);
    if max == 0.0 {
        // Both magnitudes zero: the channels agree at this index.
        return 0.0;
    }
    // Normalizing by the larger magnitude keeps the arithmetic bounded; the
    // metric itself is invariant under common positive scaling.
    let x = a / max;
    let y = b / max;
    let diff = x - y;
    (diff * diff) / (x * x + y * y)
}

/// Per-index normalized distance between a response and a reference.
pub fn channel_distance(h_t: &[f64], h_t0: &[f64]) -> Result<DistanceVector> {
    if h_t.len() != h_t0.len() {
        return Err(Error::Argument(format!(
            "distance between responses of lengths {} and {}",
            h_t.len(),
            h_t0.len()
        )));
    }
    validate_magnitudes(h_t)?;
    validate_magnitudes(h_t0)?;
    Ok(DistanceVector {
        values: h_t
            .iter()
            .zip(h_t0)
            .map(|(&a, &b)| per_index_distance(a, b))
            .collect(),
    })
}

/// Indices retained after spectrum selection, together with the alpha profile
/// the selection was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMask {
    keep: Vec<bool>,
    alpha: Vec<f64>,
    drop_fraction: f64,
}

impl SelectionMask {
    pub fn keep(&self) -> &[bool] {
        &self.keep
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn drop_fraction(&self) -> f64 {
        self.drop_fraction
    }

    pub fn len(&self) -> usize {
        self.keep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keep.is_empty()
    }

    pub fn kept_count(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }

    /// Reassembles a mask from stored parts (e.g. a monitor snapshot).
    pub fn from_parts(keep: Vec<bool>, alpha: Vec<f64>, drop_fraction: f64) -> Result<Self> {
        if keep.len() != alpha.len() {
            return Err(Error::Argument("mask parts of unequal length".into()));
        }
        Ok(SelectionMask {
            keep,
            alpha,
            drop_fraction,
        })
    }
}

/// Mean normalized deviation: mean of the per-index distances, over all
/// indices or over the mask's kept indices only. Result lies in [0, 1].
pub fn mnd(h_t: &[f64], h_t0: &[f64], mask: Option<&SelectionMask>) -> Result<f64> {
    let distance = channel_distance(h_t, h_t0)?;
    match mask {
        None => Ok(distance.values.iter().sum::<f64>() / distance.len() as f64),
        Some(mask) => {
            if mask.len() != distance.len() {
                return Err(Error::Argument(format!(
                    "mask of length {} over responses of length {}",
                    mask.len(),
                    distance.len()
                )));
            }
            let mut sum = 0.0;
            let mut count = 0usize;
            for (d, &keep) in distance.values.iter().zip(&mask.keep) {
                if keep {
                    sum += d;
                    count += 1;
                }
            }
            if count == 0 {
                return Err(Error::Degenerate("mask keeps no indices".into()));
            }
            Ok(sum / count as f64)
        }
    }
}

/// Per-index maximum distance to the reference over the provisioning set.
pub fn alpha_profile(reference: &ReferenceResponse, provisioning: &[Vec<f64>]) -> Result<Vec<f64>> {
    if provisioning.is_empty() {
        return Err(Error::Argument("alpha profile over an empty set".into()));
    }
    let mut alpha = vec![0.0; reference.len()];
    for response in provisioning {
        let distance = channel_distance(response, &reference.values)?;
        for (a, d) in alpha.iter_mut().zip(distance.values()) {
            *a = f64::max(*a, *d);
        }
    }
    Ok(alpha)
}

/// Drops exactly `floor(drop_fraction * L)` indices with the largest alpha.
/// Ties are broken deterministically: among equal alphas the higher index is
/// dropped first, so lower indices are kept.
pub fn build_mask(alpha: &[f64], drop_fraction: f64) -> Result<SelectionMask> {
    if !(drop_fraction.is_finite() && (0.0..1.0).contains(&drop_fraction)) {
        return Err(Error::Argument(format!(
            "drop fraction {drop_fraction} outside [0, 1)"
        )));
    }
    if alpha.is_empty() || !alpha.iter().all(|a| a.is_finite()) {
        return Err(Error::Argument(
            "alpha profile must be non-empty and finite".into(),
        ));
    }
    let len = alpha.len();
    let drop_count = (drop_fraction * len as f64).floor() as usize;
    let mut order: Vec<usize> = (0..len).collect();
    order.sort_by(|&a, &b| {
        alpha[b]
            .partial_cmp(&alpha[a])
            .expect("alphas are finite")
            .then_with(|| b.cmp(&a))
    });
    let mut keep = vec![true; len];
    for &idx in order.iter().take(drop_count) {
        keep[idx] = false;
    }
    Ok(SelectionMask {
        keep,
        alpha: alpha.to_vec(),
        drop_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_responses_have_zero_distance_exactly() {
        let h = vec![0.3, 1.7, 0.0, 42.0];
        let d = channel_distance(&h, &h).unwrap();
        assert!(d.values().iter().all(|&x| x == 0.0));
        assert_eq!(mnd(&h, &h, None).unwrap(), 0.0);
    }

    #[test]
    fn zero_against_positive_is_one_exactly() {
        let d = channel_distance(&[0.0], &[3.5]).unwrap();
        assert_eq!(d.values(), &[1.0]);
        // Both zero counts as agreement.
        let d = channel_distance(&[0.0], &[0.0]).unwrap();
        assert_eq!(d.values(), &[0.0]);
    }

    #[test]
    fn hand_evaluated_example() {
        // d(1, 3) = 1 - 2*3/(1+9) = 0.4
        let d = channel_distance(&[1.0], &[3.0]).unwrap();
        assert!((d.values()[0] - 0.4).abs() < 1e-15);
        // L=2 with an identity element: mean is 0.2.
        let value = mnd(&[1.0, 5.0], &[3.0, 5.0], None).unwrap();
        assert!((value - 0.2).abs() < 1e-15);
    }

    #[test]
    fn elementwise_all_zero_versus_positive_gives_unit_mnd() {
        let zeros = vec![0.0; 16];
        let ones = vec![1.0; 16];
        assert_eq!(mnd(&zeros, &ones, None).unwrap(), 1.0);
    }

    #[test]
    fn distance_rejects_bad_input() {
        assert!(channel_distance(&[1.0], &[1.0, 2.0]).is_err());
        assert!(channel_distance(&[-1.0], &[1.0]).is_err());
        assert!(channel_distance(&[f64::NAN], &[1.0]).is_err());
        assert!(channel_distance(&[f64::INFINITY], &[1.0]).is_err());
    }

    #[test]
    fn alpha_is_zero_for_reference_itself_and_dominates_members() {
        let reference = ReferenceResponse::new(vec![1.0, 2.0, 3.0], 0.0).unwrap();
        let alpha = alpha_profile(&reference, std::slice::from_ref(&reference.values)).unwrap();
        assert_eq!(alpha, vec![0.0, 0.0, 0.0]);

        let provisioning = vec![
            vec![1.1, 2.0, 3.0],
            vec![1.0, 2.5, 2.0],
            vec![0.9, 2.0, 3.3],
        ];
        let alpha = alpha_profile(&reference, &provisioning).unwrap();
        for member in &provisioning {
            let d = channel_distance(member, &reference.values).unwrap();
            for (a, v) in alpha.iter().zip(d.values()) {
                assert!(a >= v);
            }
        }
    }

    #[test]
    fn corrupted_index_dominates_its_alpha() {
        let reference = ReferenceResponse::new(vec![1.0; 8], 0.0).unwrap();
        let mut corrupted = vec![1.0; 8];
        corrupted[5] = 9.0;
        let provisioning = vec![vec![1.0; 8], corrupted.clone()];
        let alpha = alpha_profile(&reference, &provisioning).unwrap();
        let expected = channel_distance(&corrupted, &reference.values).unwrap();
        assert_eq!(alpha[5], expected.values()[5]);
    }

    #[test]
    fn mask_drops_exactly_floor_fraction() {
        let alpha = vec![0.5; 500];
        let mask = build_mask(&alpha, 0.3).unwrap();
        assert_eq!(mask.kept_count(), 350);

        let mask = build_mask(&alpha, 0.0).unwrap();
        assert_eq!(mask.kept_count(), 500);
        assert!(build_mask(&alpha, 1.0).is_err());
        assert!(build_mask(&alpha, -0.1).is_err());
    }

    #[test]
    fn mask_drops_largest_alphas_with_deterministic_ties() {
        // Ascending alphas 0..9, drop 30% -> indices 7, 8, 9 go.
        let alpha: Vec<f64> = (0..10).map(f64::from).collect();
        let mask = build_mask(&alpha, 0.3).unwrap();
        let dropped: Vec<usize> = (0..10).filter(|&i| !mask.keep()[i]).collect();
        assert_eq!(dropped, vec![7, 8, 9]);

        // All-equal alphas: the higher indices are dropped first.
        let alpha = vec![1.0; 6];
        let mask = build_mask(&alpha, 0.5).unwrap();
        let dropped: Vec<usize> = (0..6).filter(|&i| !mask.keep()[i]).collect();
        assert_eq!(dropped, vec![3, 4, 5]);
    }

    #[test]
    fn masked_mnd_on_worst_case_member_never_exceeds_unmasked() {
        // One provisioning member attains every per-index maximum, so the
        // dropped indices carry its largest distances.
        let reference = ReferenceResponse::new(vec![1.0; 10], 0.0).unwrap();
        let member: Vec<f64> = (0..10).map(|i| 1.0 + 0.1 * f64::from(i)).collect();
        let alpha = alpha_profile(&reference, std::slice::from_ref(&member)).unwrap();
        let mask = build_mask(&alpha, 0.3).unwrap();
        let masked = mnd(&member, &reference.values, Some(&mask)).unwrap();
        let unmasked = mnd(&member, &reference.values, None).unwrap();
        assert!(masked <= unmasked);
    }

    #[test]
    fn degenerate_mask_is_an_error() {
        let mask = SelectionMask::from_parts(vec![false; 3], vec![0.0; 3], 0.0).unwrap();
        assert!(matches!(
            mnd(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], Some(&mask)),
            Err(Error::Degenerate(_))
        ));
        let short = SelectionMask::from_parts(vec![true], vec![0.0], 0.0).unwrap();
        assert!(mnd(&[1.0, 2.0], &[1.0, 2.0], Some(&short)).is_err());
    }

    #[test]
    fn full_mask_equals_unmasked_exactly() {
        let a: Vec<f64> = (0..64)
            .map(|i| 0.5 + (f64::from(i) * 0.37).sin().abs())
            .collect();
        let b: Vec<f64> = (0..64)
            .map(|i| 0.5 + (f64::from(i) * 0.53).cos().abs())
            .collect();
        let alpha = vec![0.0; 64];
        let full = build_mask(&alpha, 0.0).unwrap();
        assert_eq!(
            mnd(&a, &b, Some(&full)).unwrap(),
            mnd(&a, &b, None).unwrap()
        );
    }
}
