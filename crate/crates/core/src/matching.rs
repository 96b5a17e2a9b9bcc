//! Matching predictions to ground truth: pairwise costs, rectangular Hungarian
//! assignment and the dense (multi-round) matching strategy.

use crate::codec::FourierDescriptor;
use crate::error::{Error, Result};
use crate::loss::{regression_terms, RegressionTerms, RegressionWeights};

/// A predicted descriptor with its text confidence in `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    fd: FourierDescriptor,
    score: f64,
}

impl Proposal {
    pub fn new(fd: FourierDescriptor, score: f64) -> Result<Self> {
        if !(score > 0.0 && score < 1.0) {
            return Err(Error::ScoreOutOfRange { index: 0, score });
        }
        Ok(Self { fd, score })
    }

    pub fn fd(&self) -> &FourierDescriptor {
        &self.fd
    }

    pub fn score(&self) -> f64 {
        self.score
    }
}

/// Dense `rows x cols` matrix; rows are predictions, columns ground truth.
/// Entries are finite or `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if let Some(i) = data
            .iter()
            .position(|v| v.is_nan() || *v == f64::NEG_INFINITY)
        {
            return Err(Error::InvalidCost {
                row: i / cols,
                col: i % cols,
                value: data[i],
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                expected: cols,
                actual: bad.len(),
            });
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    fn select_rows(&self, rows: &[usize]) -> CostMatrix {
        let data = rows
            .iter()
            .flat_map(|&r| self.row(r).iter().copied())
            .collect();
        CostMatrix {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }
}

/// One-to-one partial assignment; `pairs` sorted by row.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub pairs: Vec<(usize, usize)>,
    pub total: f64,
}

/// Positive `(prediction, ground truth)` pairs and unmatched predictions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchResult {
    pub positives: Vec<(usize, usize)>,
    pub negatives: Vec<usize>,
}

/// Full matching cost broken into its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCost {
    pub classification: f64,
    pub terms: RegressionTerms,
    pub regression: f64,
    pub total: f64,
}

pub fn pair_cost_breakdown(
    pred: &Proposal,
    gt: &FourierDescriptor,
    weights: &RegressionWeights,
    n: usize,
) -> Result<PairCost> {
    let classification = -pred.score().ln();
    let terms = regression_terms(pred.fd(), gt, n)?;
    let regression = terms.combine(weights);
    Ok(PairCost {
        classification,
        terms,
        regression,
        total: classification + weights.lambda * regression,
    })
}

/// `-ln(s) + lambda * (L_sd + alpha1 * L_fd + alpha2 * L_bbox)`.
pub fn pair_cost(
    pred: &Proposal,
    gt: &FourierDescriptor,
    weights: &RegressionWeights,
    n: usize,
) -> Result<f64> {
    pair_cost_breakdown(pred, gt, weights, n).map(|c| c.total)
}

pub fn build_cost_matrix(
    preds: &[Proposal],
    gts: &[FourierDescriptor],
    weights: &RegressionWeights,
    n: usize,
) -> Result<CostMatrix> {
    let mut data = Vec::with_capacity(preds.len() * gts.len());
    for p in preds {
        for g in gts {
            data.push(pair_cost(p, g, weights, n)?);
        }
    }
    CostMatrix::new(preds.len(), gts.len(), data)
}

/// Shortest-augmenting-path Hungarian solver for `n <= m`, every row matched.
/// `+inf` entries are never used; returns `None` if some row cannot be matched
/// through finite entries. Ties resolve to the lowest column index in scan order.
fn solve_rows_le_cols(
    n: usize,
    m: usize,
    cost: impl Fn(usize, usize) -> f64,
) -> Option<Vec<usize>> {
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    // p[j]: row (1-based) assigned to column j; 0 = free
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if !delta.is_finite() {
                return None;
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![usize::MAX; n];
    for j in 1..=m {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    Some(row_to_col)
}

/// Minimum-cost one-to-one assignment covering `min(rows, cols)` pairs.
pub fn hungarian(cost: &CostMatrix) -> Result<Assignment> {
    let (a, b) = (cost.rows(), cost.cols());
    if a == 0 || b == 0 {
        return Err(Error::InvalidParameter(
            "cost matrix must be non-empty".into(),
        ));
    }
    let mut pairs: Vec<(usize, usize)> = if a <= b {
        solve_rows_le_cols(a, b, |i, j| cost.get(i, j))
            .ok_or(Error::Infeasible)?
            .into_iter()
            .enumerate()
            .collect()
    } else {
        solve_rows_le_cols(b, a, |i, j| cost.get(j, i))
            .ok_or(Error::Infeasible)?
            .into_iter()
            .enumerate()
            .map(|(col, row)| (row, col))
            .collect()
    };
    pairs.sort_unstable();
    let total = pairs.iter().map(|&(r, c)| cost.get(r, c)).sum();
    Ok(Assignment { pairs, total })
}

/// Runs the matching rounds and returns each round's assignment in original
/// row indices.
///
/// Every round solves the assignment over the rows not matched yet that still
/// have a finite entry, which is equivalent to masking matched rows with `+inf`.
/// When fewer such rows remain than columns, the round matches all of them.
pub fn dense_match_rounds(cost: &CostMatrix, n_m: usize) -> Result<Vec<Assignment>> {
    if n_m == 0 {
        return Err(Error::InvalidParameter(
            "match count must be at least 1".into(),
        ));
    }
    let mut available: Vec<bool> = (0..cost.rows())
        .map(|r| cost.row(r).iter().any(|c| c.is_finite()))
        .collect();
    let mut rounds = Vec::with_capacity(n_m);
    for _ in 0..n_m {
        let active: Vec<usize> = (0..cost.rows()).filter(|&r| available[r]).collect();
        if active.is_empty() {
            break;
        }
        let sub = if active.len() == cost.rows() {
            hungarian(cost)?
        } else {
            let mut sub = hungarian(&cost.select_rows(&active))?;
            for pair in &mut sub.pairs {
                pair.0 = active[pair.0];
            }
            sub
        };
        for &(r, _) in &sub.pairs {
            available[r] = false;
        }
        rounds.push(sub);
    }
    Ok(rounds)
}

/// Dense matching: `n_m` Hungarian rounds, each removing the matched
/// predictions from later rounds. Unmatched predictions become negatives.
pub fn dense_match(cost: &CostMatrix, n_m: usize) -> Result<MatchResult> {
    let rounds = dense_match_rounds(cost, n_m)?;
    let mut matched = vec![false; cost.rows()];
    let mut positives = Vec::new();
    for round in rounds {
        for (r, c) in round.pairs {
            matched[r] = true;
            positives.push((r, c));
        }
    }
    let negatives = (0..cost.rows()).filter(|&r| !matched[r]).collect();
    Ok(MatchResult {
        positives,
        negatives,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedProposal {
    pub index: usize,
    pub proposal: Proposal,
}

/// The `n_q` highest-scoring proposals in descending score order; equal scores
/// keep input order.
pub fn select_top_proposals(
    scores: &[f64],
    fds: &[FourierDescriptor],
    n_q: usize,
) -> Result<Vec<RankedProposal>> {
    if scores.len() != fds.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: fds.len(),
        });
    }
    if n_q > scores.len() {
        return Err(Error::NotEnoughProposals {
            requested: n_q,
            available: scores.len(),
        });
    }
    crate::geometry::score_order(scores)
        .into_iter()
        .take(n_q)
        .map(|index| {
            let proposal = Proposal::new(fds[index].clone(), scores[index]).map_err(|_| {
                Error::ScoreOutOfRange {
                    index,
                    score: scores[index],
                }
            })?;
            Ok(RankedProposal { index, proposal })
        })
        .collect()
}
