//! Nearest-neighbour matching, ratio test and match-rate matrices.

use serde::{Deserialize, Serialize};

use super::{describe_in, detect_in, Descriptor, DetectorParams, FeatureSet, IntegralImage};
use crate::image::TransmissionImage;

/// Two nearest targets for one reference descriptor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnnMatch {
    pub ref_idx: usize,
    pub best_idx: usize,
    pub d1: f64,
    /// Second neighbour and its distance, absent when the target set has a
    /// single descriptor.
    pub second: Option<(usize, f64)>,
}

/// Exhaustive two-nearest-neighbour search. Ties go to the lower index.
pub fn match_knn(refs: &[Descriptor], targets: &[Descriptor]) -> Vec<KnnMatch> {
    if targets.is_empty() {
        return Vec::new();
    }
    refs.iter()
        .enumerate()
        .map(|(ri, r)| {
            let mut best: (usize, f64) = (usize::MAX, f64::INFINITY);
            let mut second: Option<(usize, f64)> = None;
            for (ti, t) in targets.iter().enumerate() {
                let d = r.distance_squared(t);
                if d < best.1 {
                    if best.0 != usize::MAX {
                        second = Some(best);
                    }
                    best = (ti, d);
                } else if second.is_none_or(|(_, sd)| d < sd) {
                    second = Some((ti, d));
                }
            }
            KnnMatch {
                ref_idx: ri,
                best_idx: best.0,
                d1: best.1.sqrt(),
                second: second.map(|(i, d)| (i, d.sqrt())),
            }
        })
        .collect()
}

/// Keep matches with `d1 < ratio·d2`. When `d2 == 0` the match survives only
/// if `d1 == 0` too; a missing second neighbour never survives.
pub fn ratio_test(matches: &[KnnMatch], ratio: f64) -> Vec<KnnMatch> {
    matches
        .iter()
        .filter(|m| match m.second {
            None => false,
            Some((_, d2)) if d2 == 0.0 => m.d1 == 0.0,
            Some((_, d2)) => m.d1 < ratio * d2,
        })
        .copied()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatchParams {
    pub detector: DetectorParams,
    pub ratio: f64,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self {
            detector: DetectorParams::default(),
            ratio: 0.7,
        }
    }
}

/// Detect and describe in one pass.
pub fn extract_features(img: &TransmissionImage, params: &DetectorParams) -> FeatureSet {
    let ii = IntegralImage::new(img);
    describe_in(&ii, &detect_in(&ii, params))
}

/// Ratio-test survivors of `reference` against `target`.
pub fn survivors(reference: &FeatureSet, target: &FeatureSet, ratio: f64) -> usize {
    ratio_test(&match_knn(&reference.descriptors, &target.descriptors), ratio).len()
}

/// Survivor counts for every (reference, target) pair; `total` is the
/// reference keypoint count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRateMatrix {
    pub ref_labels: Vec<String>,
    pub target_labels: Vec<String>,
    pub matched: Vec<Vec<usize>>,
    pub total: Vec<Vec<usize>>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MatchReportError {
    #[error("line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

impl MatchRateMatrix {
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        match self.total[i][j] {
            0 => 0.0,
            t => self.matched[i][j] as f64 / t as f64,
        }
    }

    pub fn is_square(&self) -> bool {
        self.ref_labels == self.target_labels
    }

    /// `ref,target,matched,total,rate`, one row per ordered pair.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ref,target,matched,total,rate\n");
        for (i, r) in self.ref_labels.iter().enumerate() {
            for (j, t) in self.target_labels.iter().enumerate() {
                out.push_str(&format!(
                    "{r},{t},{},{},{}\n",
                    self.matched[i][j],
                    self.total[i][j],
                    self.rate(i, j)
                ));
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, MatchReportError> {
        let err = |line: usize, msg: &str| MatchReportError::Csv {
            line: line + 1,
            msg: msg.into(),
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "ref,target,matched,total,rate")) => {}
            _ => return Err(err(0, "missing header")),
        }
        let mut rows: Vec<(String, String, usize, usize)> = Vec::new();
        for (ln, line) in lines {
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(err(ln, "expected 5 fields"));
            }
            let m = f[2].parse().map_err(|_| err(ln, "bad matched"))?;
            let t = f[3].parse().map_err(|_| err(ln, "bad total"))?;
            rows.push((f[0].to_string(), f[1].to_string(), m, t));
        }
        let mut refs: Vec<String> = Vec::new();
        let mut targets: Vec<String> = Vec::new();
        for (r, t, _, _) in &rows {
            if !refs.contains(r) {
                refs.push(r.clone());
            }
            if !targets.contains(t) {
                targets.push(t.clone());
            }
        }
        if rows.len() != refs.len() * targets.len() {
            return Err(err(0, "rows do not form a full matrix"));
        }
        let mut matched = vec![vec![0; targets.len()]; refs.len()];
        let mut total = vec![vec![0; targets.len()]; refs.len()];
        for (k, (_, _, m, t)) in rows.into_iter().enumerate() {
            let (i, j) = (k / targets.len(), k % targets.len());
            matched[i][j] = m;
            total[i][j] = t;
        }
        Ok(Self {
            ref_labels: refs,
            target_labels: targets,
            matched,
            total,
        })
    }

    /// Mean survivor fraction over off-diagonal pairs of a square matrix.
    pub fn mean_off_diagonal_rate(&self) -> f64 {
        let n = self.ref_labels.len();
        let mut sum = 0.0;
        let mut count = 0;
        for i in 0..n {
            for j in 0..self.target_labels.len() {
                if i != j {
                    sum += self.rate(i, j);
                    count += 1;
                }
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }
}

/// Match every reference set against every target set.
pub fn match_rates(
    refs: &[(String, FeatureSet)],
    targets: &[(String, FeatureSet)],
    ratio: f64,
) -> MatchRateMatrix {
    let mut matched = Vec::with_capacity(refs.len());
    let mut total = Vec::with_capacity(refs.len());
    for (_, r) in refs {
        matched.push(targets.iter().map(|(_, t)| survivors(r, t, ratio)).collect());
        total.push(vec![r.len(); targets.len()]);
    }
    MatchRateMatrix {
        ref_labels: refs.iter().map(|(l, _)| l.clone()).collect(),
        target_labels: targets.iter().map(|(l, _)| l.clone()).collect(),
        matched,
        total,
    }
}

/// Square match-rate matrix over `images`; the diagonal compares each image
/// with itself.
pub fn match_rate_matrix(
    images: &[(String, TransmissionImage)],
    params: &MatchParams,
) -> MatchRateMatrix {
    let sets: Vec<(String, FeatureSet)> = images
        .iter()
        .map(|(l, img)| (l.clone(), extract_features(img, &params.detector)))
        .collect();
    match_rates(&sets, &sets, params.ratio)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use proptest::prelude::*;

    fn random_descriptors(n: usize, seed: u64) -> Vec<Descriptor> {
        let mut rng = Stream::new(seed);
        (0..n)
            .map(|_| {
                let mut d = [0.0; 64];
                d.iter_mut().for_each(|v| *v = rng.next_gaussian());
                let n = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                d.iter_mut().for_each(|v| *v /= n);
                Descriptor(d)
            })
            .collect()
    }

    #[test]
    fn knn_matches_double_loop_oracle() {
        let refs = random_descriptors(100, 1);
        let targets = random_descriptors(100, 2);
        let got = match_knn(&refs, &targets);
        for (r, m) in refs.iter().zip(&got) {
            let mut all: Vec<(f64, usize)> = targets
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let d: f64 = r.0.iter().zip(&t.0).map(|(a, b)| (a - b).powi(2)).sum();
                    (d.sqrt(), i)
                })
                .collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            assert_eq!(m.best_idx, all[0].1);
            assert_eq!(m.second.unwrap().0, all[1].1);
            assert!(m.d1 <= m.second.unwrap().1);
        }
    }

    #[test]
    fn self_match_is_exact() {
        let d = random_descriptors(20, 3);
        for m in match_knn(&d, &d) {
            assert_eq!(m.best_idx, m.ref_idx);
            assert_eq!(m.d1, 0.0);
        }
        assert_eq!(ratio_test(&match_knn(&d, &d), 0.7).len(), 20);
    }

    #[test]
    fn empty_and_single_targets() {
        let d = random_descriptors(5, 4);
        assert!(match_knn(&d, &[]).is_empty());
        let one = match_knn(&d, &d[..1]);
        assert!(one.iter().all(|m| m.second.is_none()));
        assert!(ratio_test(&one, 0.99).is_empty());
    }

    #[test]
    fn ties_go_to_lower_index() {
        let d = random_descriptors(2, 5);
        let targets = vec![d[1], d[0], d[0]];
        let m = match_knn(&d[..1], &targets)[0];
        assert_eq!(m.best_idx, 1);
        assert_eq!(m.second, Some((2, 0.0)));
        // Exact duplicate convention: d1 = d2 = 0 survives.
        assert_eq!(ratio_test(&[m], 0.7).len(), 1);
    }

    #[test]
    fn ratio_inequality() {
        let m = KnnMatch {
            ref_idx: 0,
            best_idx: 0,
            d1: 0.2,
            second: Some((1, 0.9)),
        };
        assert_eq!(ratio_test(&[m], 0.7).len(), 1);
        assert!(ratio_test(&[m], 0.2).is_empty());
        let zero = KnnMatch {
            d1: 0.1,
            second: Some((1, 0.0)),
            ..m
        };
        assert!(ratio_test(&[zero], 0.7).is_empty());
    }

    #[test]
    fn csv_round_trip() {
        let m = MatchRateMatrix {
            ref_labels: vec!["a".into(), "b".into()],
            target_labels: vec!["a".into(), "b".into()],
            matched: vec![vec![10, 3], vec![2, 8]],
            total: vec![vec![10, 10], vec![8, 8]],
        };
        assert_eq!(MatchRateMatrix::from_csv(&m.to_csv()).unwrap(), m);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<MatchRateMatrix>(&json).unwrap(), m);
        assert!((m.mean_off_diagonal_rate() - 0.275).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn ratio_monotone(seed in any::<u64>(), r1 in 0.1f64..1.0, r2 in 0.1f64..1.0) {
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let m = match_knn(&random_descriptors(30, seed), &random_descriptors(25, seed ^ 7));
            let a = ratio_test(&m, lo);
            let b = ratio_test(&m, hi);
            prop_assert!(a.iter().all(|x| b.contains(x)));
            // Survivors keep input order.
            prop_assert!(b.windows(2).all(|w| w[0].ref_idx < w[1].ref_idx));
        }
    }
}
