//! Sparse feature vectors, interned weight tables and softmax scoring.

use indexmap::IndexMap;

/// Sparse map from feature identifier to value. Duplicate identifiers add up.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureVector {
    pub entries: Vec<(String, f64)>,
}

impl FeatureVector {
    pub fn new() -> Self {
        FeatureVector::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        FeatureVector {
            entries: Vec::with_capacity(n),
        }
    }

    /// Add a binary feature.
    pub fn on(&mut self, name: impl Into<String>) {
        self.entries.push((name.into(), 1.0));
    }

    pub fn push(&mut self, name: impl Into<String>, v: f64) {
        self.entries.push((name.into(), v));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|(_, v)| v.is_finite())
    }
}

/// A feature vector resolved against a parameter table: `(row, value)` pairs
/// sorted by row with duplicates merged.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledFv(pub Vec<(usize, f64)>);

impl CompiledFv {
    fn from_pairs(mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (r, v) in pairs {
            match out.last_mut() {
                Some(last) if last.0 == r => last.1 += v,
                _ => out.push((r, v)),
            }
        }
        CompiledFv(out)
    }

    /// Hashable identity of the vector.
    pub fn key(&self) -> Vec<(usize, u64)> {
        self.0.iter().map(|&(r, v)| (r, v.to_bits())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("class {class} outside a class set of size {num_classes}")]
    UnknownClass { class: usize, num_classes: usize },
    #[error("unknown class label `{0}`")]
    UnknownLabel(String),
    #[error("non-finite feature value for `{0}`")]
    NonFiniteFeature(String),
}

/// Weights of a log-linear categorical model: one row per feature identifier,
/// one column per class. Missing entries read as zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    num_classes: usize,
    features: IndexMap<String, usize>,
    weights: Vec<f64>,
    pub l2: f64,
    pub version: u64,
}

impl ModelParams {
    pub fn new(num_classes: usize, l2: f64) -> Self {
        ModelParams {
            num_classes,
            features: IndexMap::new(),
            weights: Vec::new(),
            l2,
            version: 0,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    pub fn feature_names(&self) -> impl Iterator<Item = &str> {
        self.features.keys().map(String::as_str)
    }

    pub fn row(&self, feature: &str) -> Option<&[f64]> {
        self.features.get(feature).map(|&r| self.row_at(r))
    }

    pub fn row_at(&self, r: usize) -> &[f64] {
        &self.weights[r * self.num_classes..(r + 1) * self.num_classes]
    }

    pub fn weight(&self, feature: &str, class: usize) -> f64 {
        self.row(feature)
            .and_then(|r| r.get(class).copied())
            .unwrap_or(0.0)
    }

    pub fn intern(&mut self, feature: &str) -> usize {
        if let Some(&r) = self.features.get(feature) {
            return r;
        }
        let r = self.features.len();
        self.features.insert(feature.to_string(), r);
        self.weights.extend(std::iter::repeat_n(0.0, self.num_classes));
        r
    }

    pub fn set_weight(&mut self, feature: &str, class: usize, w: f64) {
        let r = self.intern(feature);
        self.weights[r * self.num_classes + class] = w;
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    /// Resolve against known features; unknown ones contribute nothing.
    pub fn compile(&self, fv: &FeatureVector) -> CompiledFv {
        CompiledFv::from_pairs(
            fv.entries
                .iter()
                .filter_map(|(n, v)| self.features.get(n).map(|&r| (r, *v)))
                .collect(),
        )
    }

    /// Resolve, adding rows for unseen features.
    pub fn compile_mut(&mut self, fv: &FeatureVector) -> CompiledFv {
        CompiledFv::from_pairs(fv.entries.iter().map(|(n, v)| (self.intern(n), *v)).collect())
    }

    pub fn scores(&self, fv: &CompiledFv) -> Vec<f64> {
        let mut s = vec![0.0; self.num_classes];
        for &(r, v) in &fv.0 {
            for (acc, w) in s.iter_mut().zip(self.row_at(r)) {
                *acc += v * w;
            }
        }
        s
    }

    pub fn log_probs_compiled(&self, fv: &CompiledFv) -> Vec<f64> {
        log_softmax(self.scores(fv))
    }

    pub fn log_probs(&self, fv: &FeatureVector) -> Vec<f64> {
        self.log_probs_compiled(&self.compile(fv))
    }

    pub fn check_class(&self, class: usize) -> Result<(), ModelError> {
        if class >= self.num_classes {
            return Err(ModelError::UnknownClass {
                class,
                num_classes: self.num_classes,
            });
        }
        Ok(())
    }

    pub fn log_prob(&self, fv: &FeatureVector, class: usize) -> Result<f64, ModelError> {
        self.check_class(class)?;
        Ok(self.log_probs(fv)[class])
    }

    /// Gradient of `log_prob(fv, class)` with respect to every weight it
    /// touches, as `(feature, class, value)` triples. Features unknown to the
    /// table are included: their weights read as zero.
    pub fn grad_log_prob(
        &self,
        fv: &FeatureVector,
        class: usize,
    ) -> Result<Vec<(String, usize, f64)>, ModelError> {
        self.check_class(class)?;
        let p: Vec<f64> = self.log_probs(fv).into_iter().map(f64::exp).collect();
        let mut merged: IndexMap<&str, f64> = IndexMap::new();
        for (n, v) in &fv.entries {
            *merged.entry(n.as_str()).or_insert(0.0) += v;
        }
        let mut out = Vec::with_capacity(merged.len() * self.num_classes);
        for (n, v) in merged {
            for (k, pk) in p.iter().enumerate() {
                let ind = if k == class { 1.0 } else { 0.0 };
                out.push((n.to_string(), k, v * (ind - pk)));
            }
        }
        Ok(out)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
    }
}

pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn log_softmax(mut s: Vec<f64>) -> Vec<f64> {
    let z = logsumexp(&s);
    for x in &mut s {
        *x -= z;
    }
    s
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(names: &[&str]) -> FeatureVector {
        let mut f = FeatureVector::new();
        for n in names {
            f.on(*n);
        }
        f
    }

    #[test]
    fn uniform_at_zero() {
        let p = ModelParams::new(5, 0.0);
        for c in 0..5 {
            assert!((p.log_prob(&fv(&["a", "b"]), c).unwrap() - (0.2f64).ln()).abs() < 1e-15);
        }
        assert!(p.log_prob(&fv(&["a"]), 5).is_err());
    }

    #[test]
    fn two_class_matches_logistic() {
        let mut p = ModelParams::new(2, 0.0);
        p.set_weight("x", 0, 0.7);
        p.set_weight("x", 1, -0.4);
        p.set_weight("y", 1, 1.3);
        let f = FeatureVector {
            entries: vec![("x".into(), 2.0), ("y".into(), 0.5)],
        };
        let margin = (0.7 * 2.0) - (-0.4 * 2.0 + 1.3 * 0.5);
        let logistic = 1.0 / (1.0 + (-margin as f64).exp());
        assert!((p.log_prob(&f, 0).unwrap() - logistic.ln()).abs() < 1e-12);
    }

    #[test]
    fn shift_invariance() {
        let mut p = ModelParams::new(3, 0.0);
        p.set_weight("a", 0, 0.3);
        p.set_weight("a", 2, -1.1);
        let before = p.log_probs(&fv(&["a", "b"]));
        for c in 0..3 {
            p.set_weight("b", c, 4.2);
        }
        let after = p.log_probs(&fv(&["a", "b"]));
        for (x, y) in before.iter().zip(&after) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicates_merge() {
        let mut p = ModelParams::new(2, 0.0);
        let c = p.compile_mut(&fv(&["a", "b", "a"]));
        assert_eq!(c.0, vec![(0, 2.0), (1, 1.0)]);
    }

    #[test]
    fn uniform_gradient_is_centered() {
        let p = ModelParams::new(4, 0.0);
        let g = p.grad_log_prob(&fv(&["a"]), 1).unwrap();
        for (_, k, v) in g {
            let expect = if k == 1 { 0.75 } else { -0.25 };
            assert!((v - expect).abs() < 1e-15);
        }
        assert!(p.grad_log_prob(&FeatureVector::new(), 0).unwrap().is_empty());
    }

    #[test]
    fn argmax_prefers_lowest() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
    }
}
