//! Monotone alignments of actions to subtasks and the segmentations they induce.
//!
//! Alignment values are 1-based subtask indices, one per action. Segment spans
//! are stored 0-based and half-open.

use std::ops::Range;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlignmentError {
    #[error("empty alignment")]
    Empty,
    #[error("invalid alignment at index {index}: {reason}")]
    Violation { index: usize, reason: String },
    #[error("alignment has length {found}, expected {expected}")]
    Length { expected: usize, found: usize },
    #[error("alignment has {found} segments, expected {expected}")]
    Segments { expected: usize, found: usize },
    #[error("cannot place {m} non-empty segments over {n} actions")]
    Infeasible { n: usize, m: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Alignment(pub Vec<usize>);

impl Alignment {
    pub fn new(values: Vec<usize>) -> Result<Self, AlignmentError> {
        let a = Alignment(values);
        a.validate()?;
        Ok(a)
    }

    /// The forced one-segment alignment.
    pub fn single(n: usize) -> Self {
        Alignment(vec![1; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn num_segments(&self) -> usize {
        self.0.last().copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), AlignmentError> {
        let v = &self.0;
        if v.is_empty() {
            return Err(AlignmentError::Empty);
        }
        if v[0] != 1 {
            return Err(AlignmentError::Violation {
                index: 1,
                reason: format!("first value is {}, must be 1", v[0]),
            });
        }
        for i in 1..v.len() {
            if v[i] != v[i - 1] && v[i] != v[i - 1] + 1 {
                return Err(AlignmentError::Violation {
                    index: i + 1,
                    reason: format!("{} follows {}", v[i], v[i - 1]),
                });
            }
        }
        Ok(())
    }

    pub fn validate_for(&self, n: usize, m: usize) -> Result<(), AlignmentError> {
        self.validate()?;
        if self.len() != n {
            return Err(AlignmentError::Length {
                expected: n,
                found: self.len(),
            });
        }
        if self.num_segments() != m {
            return Err(AlignmentError::Segments {
                expected: m,
                found: self.num_segments(),
            });
        }
        Ok(())
    }

    pub fn segmentation(&self) -> Result<Segmentation, AlignmentError> {
        seg_of_alignment(self)
    }

    /// 0-based positions `i` such that a new segment starts at action `i + 1`.
    pub fn boundaries(&self) -> Vec<usize> {
        (0..self.0.len().saturating_sub(1))
            .filter(|&i| self.0[i + 1] != self.0[i])
            .collect()
    }
}

/// Contiguous, non-empty spans covering `0..n` in order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Segmentation {
    pub spans: Vec<Range<usize>>,
}

impl Segmentation {
    pub fn len_actions(&self) -> usize {
        self.spans.last().map_or(0, |s| s.end)
    }

    pub fn num_segments(&self) -> usize {
        self.spans.len()
    }

    /// Build from sorted 0-based boundary positions (segment ends are after `b`).
    pub fn from_boundaries(n: usize, boundaries: &[usize]) -> Self {
        let mut spans = Vec::with_capacity(boundaries.len() + 1);
        let mut start = 0;
        for &b in boundaries {
            spans.push(start..b + 1);
            start = b + 1;
        }
        spans.push(start..n);
        Segmentation { spans }
    }

    pub fn to_alignment(&self) -> Alignment {
        let mut v = Vec::with_capacity(self.len_actions());
        for (j, s) in self.spans.iter().enumerate() {
            v.extend(std::iter::repeat_n(j + 1, s.len()));
        }
        Alignment(v)
    }

    pub fn validate(&self) -> Result<(), AlignmentError> {
        let mut next = 0;
        for (j, s) in self.spans.iter().enumerate() {
            if s.start != next || s.end <= s.start {
                return Err(AlignmentError::Violation {
                    index: next + 1,
                    reason: format!("span {} is {:?}", j + 1, s),
                });
            }
            next = s.end;
        }
        if self.spans.is_empty() {
            return Err(AlignmentError::Empty);
        }
        Ok(())
    }

    /// Spans as 1-based inclusive index lists.
    pub fn one_based(&self) -> Vec<Vec<usize>> {
        self.spans.iter().map(|s| (s.start + 1..=s.end).collect()).collect()
    }
}

pub fn seg_of_alignment(a: &Alignment) -> Result<Segmentation, AlignmentError> {
    a.validate()?;
    let mut spans: Vec<Range<usize>> = Vec::with_capacity(a.num_segments());
    let mut start = 0;
    for i in 1..=a.len() {
        if i == a.len() || a.0[i] != a.0[i - 1] {
            spans.push(start..i);
            start = i;
        }
    }
    Ok(Segmentation { spans })
}

/// `C(n, k)` in floating point; exact for the magnitudes used as search bounds.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0f64;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c.round()
}

/// Number of valid alignments of `n` actions onto `m` subtasks.
pub fn count_alignments(n: usize, m: usize) -> f64 {
    if m == 0 || n == 0 || m > n {
        0.0
    } else {
        binomial(n - 1, m - 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enumeration {
    pub alignments: Vec<Alignment>,
    pub infeasible: bool,
}

/// All valid alignments in lexicographic order of the value sequence.
pub fn enumerate_alignments(n: usize, m: usize) -> Enumeration {
    if m == 0 || n == 0 || m > n {
        return Enumeration {
            alignments: Vec::new(),
            infeasible: true,
        };
    }
    let mut out = Vec::with_capacity(count_alignments(n, m) as usize);
    let mut cur = vec![1usize; n];
    fn rec(i: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Alignment>) {
        if i == n {
            if cur[n - 1] == m {
                out.push(Alignment(cur.clone()));
            }
            return;
        }
        let prev = cur[i - 1];
        // staying keeps the sequence smaller, so it comes first
        for v in [prev, prev + 1] {
            // remaining positions must be able to reach m
            if v > m || m - v > n - 1 - i {
                continue;
            }
            cur[i] = v;
            rec(i + 1, n, m, cur, out);
        }
    }
    rec(1, n, m, &mut cur, &mut out);
    Enumeration {
        alignments: out,
        infeasible: false,
    }
}
