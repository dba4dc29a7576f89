//! Evaluation metrics: PLCC, SROCC, RMSE, and MOS rescaling.
//!
//! These are the exact (non-differentiable) reference quantities. The rank
//! loss in [`crate::qaloss`] approximates SROCC; the functions here are what
//! reports and tests treat as ground truth.

use crate::error::{Error, Result};

/// A subjective score in its dataset-native scale together with that scale's
/// bounds.
#[derive(Debug, Clone, Copy)]
pub struct MosRecord {
    pub mos: f64,
    pub mos_min: f64,
    pub mos_max: f64,
}

/// Min-max rescaling of a MOS value into [0, 1], 0 = lowest quality.
pub fn scale_mos(rec: &MosRecord) -> Result<f64> {
    if !(rec.mos_min < rec.mos_max) {
        return Err(Error::Degenerate(format!(
            "MOS range [{}, {}] is empty",
            rec.mos_min, rec.mos_max
        )));
    }
    if rec.mos < rec.mos_min || rec.mos > rec.mos_max {
        return Err(Error::Degenerate(format!(
            "MOS {} outside [{}, {}]",
            rec.mos, rec.mos_min, rec.mos_max
        )));
    }
    Ok((rec.mos - rec.mos_min) / (rec.mos_max - rec.mos_min))
}

/// Pearson linear correlation coefficient.
pub fn plcc(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::Degenerate(
            "correlation of a constant vector".into(),
        ));
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Spearman rank-order correlation: PLCC of the two rank vectors, with ties
/// given average (fractional) ranks.
pub fn srocc(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    plcc(&rx, &ry).map_err(|e| match e {
        Error::Degenerate(_) => Error::Degenerate("all-tied input to srocc".into()),
        other => other,
    })
}

/// Root mean squared error.
pub fn rmse(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 1)?;
    let n = x.len() as f64;
    let ss = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>();
    Ok((ss / n).sqrt())
}

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("finite scores"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share rank mean of (i+1)..=(j+1)
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

fn check_pair(x: &[f64], y: &[f64], min_len: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < min_len {
        return Err(Error::TooFewValues {
            need: min_len,
            got: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    // Definition-level oracles, deliberately implemented differently from
    // the functions above: expanded-sums Pearson and O(n^2) counting ranks.
    pub(crate) fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let syy: f64 = y.iter().map(|a| a * a).sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        (sxy - sx * sy / n) / (((sxx - sx * sx / n) * (syy - sy * sy / n)).sqrt())
    }

    pub(crate) fn counting_ranks_oracle(xs: &[f64]) -> Vec<f64> {
        xs.iter()
            .map(|&v| {
                let below = xs.iter().filter(|&&o| o < v).count() as f64;
                let tied = xs.iter().filter(|&&o| o == v).count() as f64;
                below + (tied + 1.0) / 2.0
            })
            .collect()
    }

    #[test]
    fn scale_mos_bounds_and_midpoint() {
        let rec = |mos| MosRecord {
            mos,
            mos_min: 1.0,
            mos_max: 5.0,
        };
        assert_eq!(scale_mos(&rec(1.0)).unwrap(), 0.0);
        assert_eq!(scale_mos(&rec(5.0)).unwrap(), 1.0);
        assert_eq!(scale_mos(&rec(3.0)).unwrap(), 0.5);
        assert!(scale_mos(&MosRecord {
            mos: 2.0,
            mos_min: 2.0,
            mos_max: 2.0
        })
        .is_err());
    }

    #[test]
    fn plcc_exact_relations() {
        assert!((plcc(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-14);
        assert!((plcc(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-14);
        // Hand-checkable via the covariance formula: cov = 4, var = 5 each.
        let r = plcc(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-15);
    }

    #[test]
    fn plcc_errors() {
        assert!(matches!(
            plcc(&[1.0, 2.0], &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            plcc(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(plcc(&[1.0], &[1.0]), Err(Error::TooFewValues { .. })));
    }

    #[test]
    fn srocc_monotone_transform_and_reversal() {
        let x = [0.3f64, 1.7, 2.0, 5.5, 9.1];
        let y: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        assert!((srocc(&x, &y).unwrap() - 1.0).abs() < 1e-14);
        let rev: Vec<f64> = x.iter().rev().cloned().collect();
        assert!((srocc(&x, &rev).unwrap() + 1.0).abs() < 1e-14);
        let r = srocc(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-15);
    }

    #[test]
    fn srocc_all_tied_errors() {
        assert!(matches!(
            srocc(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn rmse_cases() {
        assert_eq!(rmse(&[0.5, 0.7], &[0.5, 0.7]).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(rmse(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn average_ranks_with_ties() {
        assert_eq!(
            average_ranks(&[10.0, 20.0, 20.0, 30.0]),
            vec![1.0, 2.5, 2.5, 4.0]
        );
        assert_eq!(average_ranks(&[5.0, 5.0, 5.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn matches_definition_oracles_on_random_vectors() {
        // 1000 random vectors of lengths 2..=200, with ties forced in by
        // value rounding; both metrics must agree with the oracles to 1e-10.
        let mut rng = Rng::from_seed(0xC0FFEE);
        for case in 0..1000 {
            let n = 2 + rng.below(199);
            let quantize = case % 3 == 0; // every third case gets heavy ties
            let gen = |rng: &mut Rng| -> Vec<f64> {
                (0..n)
                    .map(|_| {
                        let v = rng.range_f64(-10.0, 10.0);
                        if quantize {
                            (v * 2.0).round() / 2.0
                        } else {
                            v
                        }
                    })
                    .collect()
            };
            let x = gen(&mut rng);
            let y = gen(&mut rng);
            match plcc(&x, &y) {
                Ok(r) => {
                    let oracle = pearson_oracle(&x, &y);
                    assert!((r - oracle).abs() < 1e-10, "plcc {r} vs oracle {oracle}");
                    assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
                }
                Err(Error::Degenerate(_)) => {} // constant vector after quantizing
                Err(e) => panic!("unexpected error {e}"),
            }
            match srocc(&x, &y) {
                Ok(r) => {
                    let oracle = pearson_oracle(&counting_ranks_oracle(&x), &counting_ranks_oracle(&y));
                    assert!((r - oracle).abs() < 1e-10, "srocc {r} vs oracle {oracle}");
                }
                Err(Error::Degenerate(_)) => {}
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn symmetry_and_invariance_properties() {
        let mut rng = Rng::from_seed(31337);
        for _ in 0..200 {
            let n = 3 + rng.below(40);
            let x: Vec<f64> = (0..n).map(|_| rng.range_f64(0.0, 1.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.range_f64(0.0, 1.0)).collect();
            let (Ok(p1), Ok(p2)) = (plcc(&x, &y), plcc(&y, &x)) else {
                continue;
            };
            assert!((p1 - p2).abs() < 1e-12);
            let (Ok(s1), Ok(s2)) = (srocc(&x, &y), srocc(&y, &x)) else {
                continue;
            };
            assert!((s1 - s2).abs() < 1e-12);

            // Positive affine transform leaves PLCC unchanged (to 1e-10).
            let ax: Vec<f64> = x.iter().map(|v| 3.5 * v + 0.75).collect();
            assert!((plcc(&ax, &y).unwrap() - p1).abs() < 1e-10);

            // Strictly monotone transform leaves SROCC unchanged exactly.
            let mx: Vec<f64> = x.iter().map(|v| (2.0 * v).exp()).collect();
            assert_eq!(srocc(&mx, &y).unwrap(), s1);
        }
    }
}
