//! Dilation-augmented bipartite matching between predicted and ground-truth
//! masks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{dilate, DilationSpec};
use crate::types::{Bitmap, InstanceMask, MapClass};

const PROB_EPS: f64 = 1e-6;

/// A predicted mask with its class distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub mask: InstanceMask,
    /// Probabilities for divider, ped crossing and curb, in that order.
    pub class_probs: [f64; 3],
    pub no_object: f64,
}

impl Prediction {
    pub fn new(mask: InstanceMask, class_probs: [f64; 3], no_object: f64) -> Result<Self> {
        let all = class_probs.iter().chain(std::iter::once(&no_object));
        if all.clone().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidInstance("class probability outside [0, 1]".into()));
        }
        let total: f64 = all.sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidInstance(format!("class probabilities sum to {total}")));
        }
        Ok(Self {
            mask,
            class_probs,
            no_object,
        })
    }

    /// Certain prediction of the mask's own class.
    pub fn one_hot(mask: InstanceMask) -> Self {
        let mut class_probs = [0.0; 3];
        class_probs[mask.class.index()] = 1.0;
        Self {
            mask,
            class_probs,
            no_object: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostWeights {
    pub w_cls: f64,
    pub w_ce: f64,
    pub w_dice: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            w_cls: 2.0,
            w_ce: 5.0,
            w_dice: 5.0,
        }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.w_cls, self.w_ce, self.w_dice];
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config("cost weights must be finite and non-negative".into()));
        }
        if w.iter().all(|v| *v == 0.0) {
            return Err(Error::Config("cost weights are all zero".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatcherConfig {
    pub weights: CostWeights,
    /// Applied to both masks of every pair, for the cost only.
    pub dilation: DilationSpec,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        Self {
            weights: CostWeights::default(),
            dilation: DilationSpec::square(2),
        }
    }
}

/// Row-major matrix with one row per prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(rows, cols, data.len(), 1));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInstance("cost matrix has non-finite entries".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn get(&self, pred: usize, gt: usize) -> f64 {
        self.data[pred * self.cols + gt]
    }

    fn transposed(&self) -> CostMatrix {
        CostMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    /// (pred, gt) pairs sorted by pred index.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_preds: Vec<usize>,
    pub unmatched_gts: Vec<usize>,
}

impl Assignment {
    pub fn total_cost(&self, costs: &CostMatrix) -> f64 {
        self.pairs.iter().map(|&(i, j)| costs.get(i, j)).sum()
    }

    pub fn gt_for(&self, pred: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == pred).map(|p| p.1)
    }
}

pub fn classification_cost(pred: &Prediction, gt_class: MapClass) -> f64 {
    -pred.class_probs[gt_class.index()]
}

fn ce_dilated(p: &Bitmap, g: &Bitmap) -> f64 {
    let n = p.data().len();
    if n == 0 {
        return 0.0;
    }
    let sum: f64 = p
        .data()
        .iter()
        .zip(g.data())
        .map(|(&pv, &gv)| {
            let pv = (pv as f64).clamp(PROB_EPS, 1.0 - PROB_EPS);
            if gv >= 0.5 {
                -pv.ln()
            } else {
                -(1.0 - pv).ln()
            }
        })
        .sum();
    sum / n as f64
}

fn dice_dilated(p: &Bitmap, g: &Bitmap) -> f64 {
    let (mut inter, mut sp, mut sg) = (0.0, 0.0, 0.0);
    for (&pv, &gv) in p.data().iter().zip(g.data()) {
        let gv = if gv >= 0.5 { 1.0 } else { 0.0 };
        inter += pv as f64 * gv;
        sp += pv as f64;
        sg += gv;
    }
    1.0 - (2.0 * inter + 1.0) / (sp + sg + 1.0)
}

/// Mean binary cross-entropy between the dilated prediction and the
/// dilated, binarized ground truth.
pub fn ce_cost(pred: &Bitmap, gt: &Bitmap, dilation: DilationSpec) -> Result<f64> {
    pred.same_dims(gt)?;
    Ok(ce_dilated(&dilate(pred, dilation), &dilate(gt, dilation)))
}

/// One minus the smoothed dice coefficient of the dilated masks.
pub fn dice_cost(pred: &Bitmap, gt: &Bitmap, dilation: DilationSpec) -> Result<f64> {
    pred.same_dims(gt)?;
    Ok(dice_dilated(&dilate(pred, dilation), &dilate(gt, dilation)))
}

/// Weighted cost for every (prediction, ground truth) pair. Each mask is
/// dilated once.
pub fn cost_matrix(
    preds: &[Prediction],
    gts: &[InstanceMask],
    w: &CostWeights,
    dilation: DilationSpec,
) -> Result<CostMatrix> {
    for (a, b) in preds.iter().zip(gts.iter().cycle()) {
        a.mask.bitmap.same_dims(&b.bitmap)?;
    }
    for g in gts.iter().skip(1) {
        g.bitmap.same_dims(&gts[0].bitmap)?;
    }
    let dp: Vec<Bitmap> = preds.iter().map(|p| dilate(&p.mask.bitmap, dilation)).collect();
    let dg: Vec<Bitmap> = gts.iter().map(|g| dilate(&g.bitmap, dilation)).collect();
    Ok(CostMatrix::from_fn(preds.len(), gts.len(), |i, j| {
        let mut c = w.w_cls * classification_cost(&preds[i], gts[j].class);
        if w.w_ce != 0.0 {
            c += w.w_ce * ce_dilated(&dp[i], &dg[j]);
        }
        if w.w_dice != 0.0 {
            c += w.w_dice * dice_dilated(&dp[i], &dg[j]);
        }
        c
    }))
}

/// Shortest augmenting path Hungarian method for `rows <= cols`; returns
/// the column of each row.
fn hungarian(c: &CostMatrix) -> Vec<usize> {
    let (n, m) = (c.rows, c.cols);
    debug_assert!(n <= m);
    // 1-based potentials; column 0 is a virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = c.get(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![usize::MAX; n];
    for j in 1..=m {
        if owner[j] != 0 {
            col_of[owner[j] - 1] = j - 1;
        }
    }
    col_of
}

/// Minimum-cost one-to-one assignment of size `min(P, G)`.
pub fn assign(costs: &CostMatrix) -> Assignment {
    let (p, g) = (costs.rows, costs.cols);
    let mut pairs = Vec::with_capacity(p.min(g));
    if p > 0 && g > 0 {
        if p <= g {
            for (i, j) in hungarian(costs).into_iter().enumerate() {
                pairs.push((i, j));
            }
        } else {
            for (j, i) in hungarian(&costs.transposed()).into_iter().enumerate() {
                pairs.push((i, j));
            }
            pairs.sort_unstable();
        }
    }
    let mut pred_used = vec![false; p];
    let mut gt_used = vec![false; g];
    for &(i, j) in &pairs {
        pred_used[i] = true;
        gt_used[j] = true;
    }
    Assignment {
        pairs,
        unmatched_preds: (0..p).filter(|&i| !pred_used[i]).collect(),
        unmatched_gts: (0..g).filter(|&j| !gt_used[j]).collect(),
    }
}
