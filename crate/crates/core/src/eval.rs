//! Confusion-matrix metrics, ROC/AUC, stratified folds and
//! information-gain ranking.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::binarize::BinaryMatrix;
use crate::bits::BitVec;
use crate::error::{Error, Result};

/// Counts laid out as actual x predicted: `f11` TP, `f10` FN, `f01` FP, `f00` TN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct ConfusionMatrix {
    pub f11: usize,
    pub f10: usize,
    pub f01: usize,
    pub f00: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.f11 + self.f10 + self.f01 + self.f00
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        self.f11 += other.f11;
        self.f10 += other.f10;
        self.f01 += other.f01;
        self.f00 += other.f00;
    }

    pub fn accuracy(&self) -> Result<f64> {
        ratio(self.f00 + self.f11, self.total(), "accuracy")
    }

    pub fn sensitivity(&self) -> Result<f64> {
        ratio(self.f11, self.f11 + self.f10, "sensitivity")
    }

    pub fn specificity(&self) -> Result<f64> {
        ratio(self.f00, self.f00 + self.f01, "specificity")
    }

    pub fn fpr(&self) -> Result<f64> {
        ratio(self.f01, self.f00 + self.f01, "fpr")
    }

    pub fn tpr(&self) -> Result<f64> {
        ratio(self.f11, self.f11 + self.f10, "tpr")
    }
}

fn ratio(num: usize, den: usize, metric: &'static str) -> Result<f64> {
    if den == 0 {
        return Err(Error::UndefinedMetric { metric });
    }
    Ok(num as f64 / den as f64)
}

pub fn confusion(predicted: &[bool], actual: &[bool]) -> Result<ConfusionMatrix> {
    if predicted.len() != actual.len() {
        return Err(Error::Param(format!(
            "{} predictions for {} labels",
            predicted.len(),
            actual.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::Param("empty prediction list".into()));
    }
    let mut m = ConfusionMatrix::default();
    for (&p, &a) in predicted.iter().zip(actual) {
        match (a, p) {
            (true, true) => m.f11 += 1,
            (true, false) => m.f10 += 1,
            (false, true) => m.f01 += 1,
            (false, false) => m.f00 += 1,
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// (fpr, tpr), from (0, 0) to (1, 1).
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Threshold sweep over distinct scores, highest first. Tied scores cross
/// the threshold together, so a tie between a positive and a negative adds
/// a diagonal segment worth half a correctly ordered pair.
pub fn roc_auc(scores: &[f64], actual: &[bool]) -> Result<RocCurve> {
    if scores.len() != actual.len() {
        return Err(Error::Param(format!("{} scores for {} labels", scores.len(), actual.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Param("NaN score".into()));
    }
    let pos = actual.iter().filter(|&&a| a).count();
    let neg = actual.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Param("ROC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    // twice the area, in units of one (pos, neg) pair
    let mut area2 = 0usize;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == s {
            if actual[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        area2 += (fp - fp0) * (tp + tp0);
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(RocCurve {
        points,
        auc: area2 as f64 / (2 * pos * neg) as f64,
    })
}

/// Fold assignment with per-class shuffles dealt round-robin; the deal
/// continues across classes so fold sizes differ by at most one.
pub fn stratified_kfold(
    n_records: usize,
    labels: &[bool],
    k: usize,
    seed: u64,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if labels.len() != n_records {
        return Err(Error::Param(format!("{} labels for {n_records} records", labels.len())));
    }
    if k < 2 {
        return Err(Error::Param(format!("need at least 2 folds, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; n_records];
    let mut next = 0;
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..n_records).filter(|&i| labels[i] == class).collect();
        if idx.len() < k {
            return Err(Error::Param(format!(
                "class {} has {} members, fewer than {k} folds",
                if class { "positive" } else { "negative" },
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for i in idx {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..n_records).partition(|&i| fold_of[i] == f);
            (train, test)
        })
        .collect())
}

/// Shannon entropy in bits; `0 log 0 = 0`.
pub fn entropy(dist: &[f64]) -> Result<f64> {
    if dist.iter().any(|&p| !p.is_finite() || p < 0.0) {
        return Err(Error::Param("probabilities must be finite and non-negative".into()));
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Param(format!("probabilities sum to {sum}, not 1")));
    }
    Ok(dist.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum())
}

fn binary_entropy(ones: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = ones as f64 / n as f64;
    entropy(&[p, 1.0 - p]).expect("valid distribution")
}

/// Parent entropy of `target` minus the size-weighted entropy of the two
/// children split by `feature`.
pub fn info_gain(feature: &BitVec, target: &BitVec) -> Result<f64> {
    if feature.len() != target.len() {
        return Err(Error::Param("feature and target lengths differ".into()));
    }
    let n = target.len();
    if n == 0 {
        return Err(Error::Param("empty column".into()));
    }
    let pos = target.count_ones();
    let n1 = feature.count_ones();
    let pos1 = feature.and_count(target);
    let (n0, pos0) = (n - n1, pos - pos1);
    let children = (n1 as f64 / n as f64) * binary_entropy(pos1, n1)
        + (n0 as f64 / n as f64) * binary_entropy(pos0, n0);
    Ok((binary_entropy(pos, n) - children).max(0.0))
}

/// Columns by information gain, descending; ties by name.
pub fn rank_features(data: &BinaryMatrix, top_n: usize) -> Result<Vec<(String, f64)>> {
    let mut ranked = data
        .feature_names
        .iter()
        .zip(&data.columns)
        .map(|(name, col)| Ok((name.clone(), info_gain(col, &data.target)?)))
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(top_n);
    Ok(ranked)
}

/// Pooled and per-fold metrics for one cross-validated (or held-out) run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub pooled: ConfusionMatrix,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub fpr: f64,
    pub tpr: f64,
    pub auc: f64,
    /// Mean of per-fold accuracies.
    pub mean_fold_accuracy: f64,
    pub folds: Vec<FoldMetrics>,
    pub roc: RocCurve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldMetrics {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub selected: Option<usize>,
}

impl MetricReport {
    /// `folds` holds each fold's (confusion, selected feature count); the
    /// ROC curve uses the pooled out-of-fold scores.
    pub fn from_folds(
        folds: Vec<(ConfusionMatrix, Option<usize>)>,
        scores: &[f64],
        actual: &[bool],
    ) -> Result<Self> {
        let mut pooled = ConfusionMatrix::default();
        let mut fold_metrics = Vec::new();
        for (cm, selected) in folds {
            pooled.add(&cm);
            fold_metrics.push(FoldMetrics {
                confusion: cm,
                accuracy: cm.accuracy()?,
                sensitivity: cm.sensitivity().ok(),
                specificity: cm.specificity().ok(),
                selected,
            });
        }
        if fold_metrics.is_empty() {
            return Err(Error::Param("no folds".into()));
        }
        let roc = roc_auc(scores, actual)?;
        Ok(Self {
            accuracy: pooled.accuracy()?,
            sensitivity: pooled.sensitivity()?,
            specificity: pooled.specificity()?,
            fpr: pooled.fpr()?,
            tpr: pooled.tpr()?,
            auc: roc.auc,
            mean_fold_accuracy: fold_metrics.iter().map(|f| f.accuracy).sum::<f64>() / fold_metrics.len() as f64,
            folds: fold_metrics,
            pooled,
            roc,
        })
    }

    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let c = &self.pooled;
        s += &format!("accuracy = {:.6}\n", self.accuracy);
        s += &format!("sensitivity = {:.6}\n", self.sensitivity);
        s += &format!("specificity = {:.6}\n", self.specificity);
        s += &format!("fpr = {:.6}\n", self.fpr);
        s += &format!("tpr = {:.6}\n", self.tpr);
        s += &format!("auc = {:.6}\n", self.auc);
        s += &format!("mean_fold_accuracy = {:.6}\n", self.mean_fold_accuracy);
        s += &format!("f11 = {}\nf10 = {}\nf01 = {}\nf00 = {}\n", c.f11, c.f10, c.f01, c.f00);
        s += &format!("folds = {}\n", self.folds.len());
        let opt = |x: Option<f64>| x.map_or("undefined".to_string(), |v| format!("{v:.6}"));
        for (i, f) in self.folds.iter().enumerate() {
            s += &format!(
                "fold.{i} = accuracy {:.6} sensitivity {} specificity {} f11 {} f10 {} f01 {} f00 {}{}\n",
                f.accuracy,
                opt(f.sensitivity),
                opt(f.specificity),
                f.confusion.f11,
                f.confusion.f10,
                f.confusion.f01,
                f.confusion.f00,
                f.selected.map_or(String::new(), |n| format!(" selected {n}")),
            );
        }
        s
    }

    /// Two-column `fpr,tpr` CSV.
    pub fn roc_csv(&self) -> String {
        let mut s = String::from("fpr,tpr\n");
        for (x, y) in &self.roc.points {
            s += &format!("{x:.6},{y:.6}\n");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn confusion_cells() {
        let m = confusion(&[true, true, false, false], &[true, false, true, false]).unwrap();
        assert_eq!(m, ConfusionMatrix { f11: 1, f10: 1, f01: 1, f00: 1 });
        assert!(confusion(&[true], &[]).is_err());
        assert!(confusion(&[], &[]).is_err());

        let actual: Vec<bool> = (0..15).map(|i| i < 10).collect();
        let m = confusion(&actual, &actual).unwrap();
        assert_eq!(m, ConfusionMatrix { f11: 10, f10: 0, f01: 0, f00: 5 });
        let flipped: Vec<bool> = actual.iter().map(|a| !a).collect();
        let f = confusion(&flipped, &actual).unwrap();
        assert_eq!((f.f11, f.f10, f.f01, f.f00), (m.f10, m.f11, m.f00, m.f01));
    }

    #[test]
    fn metric_formulas() {
        let m = ConfusionMatrix { f11: 216, f10: 0, f01: 5, f00: 82 };
        assert!((m.accuracy().unwrap() - 298.0 / 303.0).abs() < 1e-15);
        assert_eq!(m.sensitivity().unwrap(), 1.0);
        assert!((m.specificity().unwrap() - 82.0 / 87.0).abs() < 1e-15);

        let u = ConfusionMatrix { f11: 1, f10: 1, f01: 1, f00: 1 };
        for v in [u.accuracy(), u.sensitivity(), u.specificity(), u.fpr(), u.tpr()] {
            assert_eq!(v.unwrap(), 0.5);
        }
        let perfect = ConfusionMatrix { f11: 7, f10: 0, f01: 0, f00: 3 };
        assert_eq!(perfect.accuracy().unwrap(), 1.0);
        assert_eq!(perfect.sensitivity().unwrap(), 1.0);
        assert_eq!(perfect.specificity().unwrap(), 1.0);
    }

    #[test]
    fn zero_denominator_is_an_error() {
        let m = ConfusionMatrix { f11: 3, f10: 0, f01: 0, f00: 0 };
        assert!(matches!(m.specificity(), Err(Error::UndefinedMetric { metric: "specificity" })));
        assert!(m.fpr().is_err());
        assert!(ConfusionMatrix::default().accuracy().is_err());
    }

    #[test]
    fn roc_examples() {
        let r = roc_auc(&[0.9, 0.8, 0.7, 0.6], &[true, false, true, false]).unwrap();
        assert_eq!(r.auc, 0.75);
        assert_eq!(r.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(r.points.last(), Some(&(1.0, 1.0)));
        assert_eq!(roc_auc(&[4.0, 3.0, 2.0, 1.0], &[true, true, false, false]).unwrap().auc, 1.0);
        assert_eq!(roc_auc(&[1.0, 2.0, 3.0, 4.0], &[true, true, false, false]).unwrap().auc, 0.0);
        assert_eq!(roc_auc(&[1.0, 1.0], &[true, false]).unwrap().auc, 0.5);
        assert!(roc_auc(&[1.0, 2.0], &[true, true]).is_err());
    }

    #[test]
    fn folds_of_303() {
        let labels: Vec<bool> = (0..303).map(|i| i % 10 < 7).collect();
        let folds = stratified_kfold(303, &labels, 10, 7).unwrap();
        let mut seen = vec![0; 303];
        for (train, test) in &folds {
            assert!(test.len() == 30 || test.len() == 31, "{}", test.len());
            assert_eq!(train.len() + test.len(), 303);
            for &i in test {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
        assert_eq!(folds, stratified_kfold(303, &labels, 10, 7).unwrap());
    }

    #[test]
    fn leave_one_out() {
        let labels = [true, false, true, false, true, false];
        let folds = stratified_kfold(6, &labels, 3, 1).unwrap();
        assert_eq!(folds.len(), 3);
        let labels = [true, false, true, false];
        let folds = stratified_kfold(4, &labels, 2, 1).unwrap();
        assert!(folds.iter().all(|(_, t)| t.len() == 2));
        let labels = [true, false, true, false, true, false, true, false];
        let loo = stratified_kfold(8, &labels, 4, 1).unwrap();
        assert!(loo.iter().all(|(_, t)| t.len() == 2));
        assert!(stratified_kfold(4, &[true, false, false, false], 2, 0).is_err());
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy(&[0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(entropy(&[1.0, 0.0]).unwrap(), 0.0);
        assert!((entropy(&[0.25, 0.75]).unwrap() - 0.811278).abs() < 1e-6);
        assert!(entropy(&[0.5, 0.6]).is_err());
        assert!(entropy(&[-0.5, 1.5]).is_err());
    }

    #[test]
    fn gain_edge_cases() {
        let t = BitVec::from_bools([true, true, false, true, false]);
        let h = entropy(&[0.6, 0.4]).unwrap();
        assert!((info_gain(&t, &t).unwrap() - h).abs() < 1e-12);
        assert_eq!(info_gain(&BitVec::ones(5), &t).unwrap(), 0.0);
        assert_eq!(info_gain(&BitVec::zeros(5), &t).unwrap(), 0.0);
    }

    #[test]
    fn ranking_ties_by_name() {
        let t = BitVec::from_bools([true, true, false, false]);
        let noise = BitVec::from_bools([true, false, true, false]);
        let m = BinaryMatrix::new(
            vec!["z".into(), "b".into(), "a".into(), "target_copy".into()],
            vec![noise.clone(), noise.clone(), BitVec::from_bools([true, false, false, false]), t.clone()],
            "y".into(),
            t,
        )
        .unwrap();
        let r = rank_features(&m, 10).unwrap();
        assert_eq!(r[0].0, "target_copy");
        assert_eq!(r[0].1, 1.0);
        assert_eq!(r[1].0, "a");
        assert_eq!((r[2].0.as_str(), r[3].0.as_str()), ("b", "z"));
        assert_eq!(r[2].1, r[3].1);
        assert_eq!(rank_features(&m, 1).unwrap().len(), 1);
    }

    proptest! {
        #[test]
        fn metric_identities(f11 in 0usize..50, f10 in 0usize..50, f01 in 0usize..50, f00 in 0usize..50) {
            let m = ConfusionMatrix { f11, f10, f01, f00 };
            if f11 + f10 > 0 {
                prop_assert_eq!(m.tpr().unwrap(), m.sensitivity().unwrap());
            }
            if f00 + f01 > 0 {
                prop_assert!((m.fpr().unwrap() - (1.0 - m.specificity().unwrap())).abs() < 1e-15);
            }
        }

        #[test]
        fn gain_is_bounded(bits in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..80)) {
            let f: BitVec = bits.iter().map(|b| b.0).collect();
            let t: BitVec = bits.iter().map(|b| b.1).collect();
            let g = info_gain(&f, &t).unwrap();
            let p = t.count_ones() as f64 / t.len() as f64;
            prop_assert!(g >= 0.0);
            prop_assert!(g <= entropy(&[p, 1.0 - p]).unwrap() + 1e-12);
        }

        #[test]
        fn entropy_peaks_at_uniform(p in 0.0f64..=1.0) {
            let h = entropy(&[p, 1.0 - p]).unwrap();
            prop_assert!(h <= 1.0 + 1e-12);
            prop_assert_eq!(h == 0.0, p == 0.0 || p == 1.0);
        }

        #[test]
        fn folds_keep_class_ratio(n_pos in 10usize..60, n_neg in 10usize..60, k in 2usize..10, seed in any::<u64>()) {
            let labels: Vec<bool> = (0..n_pos + n_neg).map(|i| i < n_pos).collect();
            let n = labels.len();
            let folds = stratified_kfold(n, &labels, k, seed).unwrap();
            let mut seen = vec![false; n];
            for (_, test) in &folds {
                let pos = test.iter().filter(|&&i| labels[i]).count() as f64;
                prop_assert!((pos - n_pos as f64 / k as f64).abs() < 1.0);
                prop_assert!((test.len() as f64 - n as f64 / k as f64).abs() < 1.0);
                for &i in test {
                    prop_assert!(!seen[i]);
                    seen[i] = true;
                }
            }
            prop_assert!(seen.iter().all(|&s| s));
        }
    }
}
