use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::corpus::{Alignment, SubtaskCategory};

/// A ratio of integer counts; `rate` is absent when the denominator is zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Rate {
    pub num: u64,
    pub den: u64,
}

#[derive(Serialize, Deserialize)]
struct RateRepr {
    num: u64,
    den: u64,
    rate: Option<f64>,
}

impl Serialize for Rate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RateRepr {
            num: self.num,
            den: self.den,
            rate: self.value(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = RateRepr::deserialize(d)?;
        if r.num > r.den {
            return Err(serde::de::Error::custom("numerator exceeds denominator"));
        }
        Ok(Rate { num: r.num, den: r.den })
    }
}

impl Rate {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(num <= den, "rate {num}/{den}");
        Rate { num, den }
    }

    pub fn value(&self) -> Option<f64> {
        (self.den > 0).then(|| self.num as f64 / self.den as f64)
    }

    /// Value with an empty denominator read as zero.
    pub fn or_zero(&self) -> f64 {
        self.value().unwrap_or(0.0)
    }

    pub fn add(&mut self, hit: bool) {
        self.num += u64::from(hit);
        self.den += 1;
    }

    pub fn merge(&mut self, o: Rate) {
        self.num += o.num;
        self.den += o.den;
    }
}

/// Per-category rates over the eight subtask categories, plus their pooled
/// (micro) average.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryRates {
    pub per_category: IndexMap<String, Rate>,
    pub average: Rate,
}

impl Default for CategoryRates {
    fn default() -> Self {
        CategoryRates {
            per_category: SubtaskCategory::ALL
                .iter()
                .map(|c| (c.name().to_string(), Rate::default()))
                .collect(),
            average: Rate::default(),
        }
    }
}

impl CategoryRates {
    pub fn add(&mut self, c: SubtaskCategory, hit: bool) {
        self.per_category[c.name()].add(hit);
        self.average.add(hit);
    }

    pub fn merge(&mut self, o: &CategoryRates) {
        for (k, r) in &o.per_category {
            self.per_category[k.as_str()].merge(*r);
        }
        self.average.merge(o.average);
    }

    pub fn get(&self, c: SubtaskCategory) -> Rate {
        self.per_category[c.name()]
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("demonstration {0} has no ground-truth alignment or annotation")]
    MissingGroundTruth(String),
    #[error("alignments cover {0} and {1} actions")]
    LengthMismatch(usize, usize),
    #[error("{0}")]
    Invalid(String),
}

/// Agreement between an imputed and a ground-truth alignment. With equal
/// segment counts: matching ordinals over actions. Otherwise: boundary
/// agreement, `(n - 1) - |symmetric difference|` over `n - 1`.
pub fn segmentation_accuracy(imputed: &Alignment, gt: &Alignment) -> Result<Rate, EvalError> {
    let n = gt.len();
    if imputed.len() != n {
        return Err(EvalError::LengthMismatch(imputed.len(), n));
    }
    for a in [imputed, gt] {
        a.validate().map_err(|e| EvalError::Invalid(e.to_string()))?;
    }
    if imputed.num_segments() == gt.num_segments() {
        let hits = imputed.0.iter().zip(&gt.0).filter(|(a, b)| a == b).count();
        return Ok(Rate::new(hits as u64, n as u64));
    }
    boundary_agreement(imputed, gt)
}

/// `(n - 1) - |symmetric difference of boundary sets|` over `n - 1`.
pub fn boundary_agreement(a: &Alignment, b: &Alignment) -> Result<Rate, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    let (ba, bb) = (a.boundaries(), b.boundaries());
    let sym = ba.iter().filter(|x| !bb.contains(x)).count() + bb.iter().filter(|x| !ba.contains(x)).count();
    let den = a.len().saturating_sub(1) as u64;
    Ok(Rate::new(den.saturating_sub(sym as u64), den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_serialization() {
        let r = Rate::new(1, 4);
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"num":1,"den":4,"rate":0.25}"#);
        assert_eq!(serde_json::from_str::<Rate>(&s).unwrap(), r);
        assert_eq!(serde_json::to_string(&Rate::default()).unwrap(), r#"{"num":0,"den":0,"rate":null}"#);
        assert!(serde_json::from_str::<Rate>(r#"{"num":3,"den":2,"rate":null}"#).is_err());
    }

    #[test]
    fn segmentation_agreement() {
        let a = Alignment(vec![1, 1, 2, 2, 3]);
        assert_eq!(segmentation_accuracy(&a, &a).unwrap().value(), Some(1.0));
        // one boundary off by one, n = 10
        let gt = Alignment(vec![1, 1, 1, 1, 2, 2, 2, 2, 2, 2]);
        let im = Alignment(vec![1, 1, 1, 1, 1, 2, 2, 2, 2, 2]);
        assert_eq!(segmentation_accuracy(&im, &gt).unwrap(), Rate::new(9, 10));
        assert_eq!(boundary_agreement(&im, &gt).unwrap(), Rate::new(7, 9));
        let im3 = Alignment(vec![1, 1, 1, 1, 1, 2, 2, 3, 3, 3]);
        // boundaries {4, 6} vs {3}: symmetric difference 3
        assert_eq!(segmentation_accuracy(&im3, &gt).unwrap(), Rate::new(6, 9));
        assert!(segmentation_accuracy(&Alignment(vec![1]), &gt).is_err());
    }

    #[test]
    fn category_table_is_fixed() {
        let mut c = CategoryRates::default();
        c.add(SubtaskCategory::Put, true);
        c.add(SubtaskCategory::GoTo, false);
        assert_eq!(c.per_category.len(), 8);
        assert_eq!(c.average, Rate::new(1, 2));
        assert_eq!(c.get(SubtaskCategory::Put), Rate::new(1, 1));
    }
}
