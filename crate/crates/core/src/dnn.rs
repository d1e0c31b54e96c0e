//! Piecewise-linear network saliency as a selection event.
//!
//! A network built from affine maps, ReLUs and max-pooling is affine in the
//! input once every ReLU sign and every pooling winner is fixed. Along a line
//! `x(r) = a + b r` each such choice, and the thresholding of the output
//! saliency map, is a linear inequality in `r`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{OracleResponse, SelectionOracle};
use crate::intervals::{solve_quadratic_le, IntervalUnion, QuadraticCoeffs};
use crate::line::LineParam;

/// Tolerance for snapping the queried point into its own region.
const ABSORB_TOL: f64 = 1e-8;

/// One network layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LayerSpec", into = "LayerSpec")]
pub enum Layer {
    Affine {
        w: DMatrix<f64>,
        b: DVector<f64>,
    },
    Relu,
    /// Max-pooling of a `side × side` row-major map with square windows.
    MaxPool {
        side: usize,
        window: usize,
        stride: usize,
    },
}

/// Row-major JSON form of a layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum LayerSpec {
    Affine {
        w: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    Relu,
    Maxpool {
        side: usize,
        window: usize,
        stride: usize,
    },
}

impl TryFrom<LayerSpec> for Layer {
    type Error = Error;

    fn try_from(spec: LayerSpec) -> Result<Self> {
        match spec {
            LayerSpec::Affine { w, b } => {
                let rows = w.len();
                let cols = w.first().map_or(0, Vec::len);
                if rows == 0 || cols == 0 || w.iter().any(|r| r.len() != cols) || b.len() != rows {
                    return Err(Error::InvalidArgument(
                        "affine layer needs a non-empty rectangular matrix and matching bias"
                            .into(),
                    ));
                }
                Ok(Layer::Affine {
                    w: DMatrix::from_row_iterator(rows, cols, w.into_iter().flatten()),
                    b: DVector::from_vec(b),
                })
            }
            LayerSpec::Relu => Ok(Layer::Relu),
            LayerSpec::Maxpool {
                side,
                window,
                stride,
            } => Layer::max_pool(side, window, stride),
        }
    }
}

impl From<Layer> for LayerSpec {
    fn from(layer: Layer) -> Self {
        match layer {
            Layer::Affine { w, b } => LayerSpec::Affine {
                w: w.row_iter().map(|r| r.iter().copied().collect()).collect(),
                b: b.iter().copied().collect(),
            },
            Layer::Relu => LayerSpec::Relu,
            Layer::MaxPool {
                side,
                window,
                stride,
            } => LayerSpec::Maxpool {
                side,
                window,
                stride,
            },
        }
    }
}

impl Layer {
    pub fn max_pool(side: usize, window: usize, stride: usize) -> Result<Self> {
        if window == 0 || stride == 0 || window > side {
            return Err(Error::InvalidArgument(format!(
                "invalid pooling: side {side}, window {window}, stride {stride}"
            )));
        }
        Ok(Layer::MaxPool {
            side,
            window,
            stride,
        })
    }

    fn output_len(&self, input_len: usize) -> Result<usize> {
        match self {
            Layer::Affine { w, .. } => {
                if w.ncols() != input_len {
                    return Err(Error::InvalidArgument(format!(
                        "affine layer expects {} inputs, got {input_len}",
                        w.ncols()
                    )));
                }
                Ok(w.nrows())
            }
            Layer::Relu => Ok(input_len),
            Layer::MaxPool {
                side,
                window,
                stride,
            } => {
                if side * side != input_len {
                    return Err(Error::InvalidArgument(format!(
                        "pooling expects a {side}x{side} map, got {input_len} values"
                    )));
                }
                let out = (side - window) / stride + 1;
                Ok(out * out)
            }
        }
    }

    /// Input indices of every pooling window, in output order.
    fn windows(side: usize, window: usize, stride: usize) -> Vec<Vec<usize>> {
        let out = (side - window) / stride + 1;
        let mut all = Vec::with_capacity(out * out);
        for oi in 0..out {
            for oj in 0..out {
                let mut w = Vec::with_capacity(window * window);
                for di in 0..window {
                    for dj in 0..window {
                        w.push((oi * stride + di) * side + oj * stride + dj);
                    }
                }
                all.push(w);
            }
        }
        all
    }
}

/// Which piece of each nonlinearity is active.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LayerPattern {
    Affine,
    Relu(Vec<bool>),
    MaxPool(Vec<usize>),
}

/// Activation pattern of a whole forward pass.
pub type ActivationPattern = Vec<LayerPattern>;

/// Network mapping a `side × side` image to a per-pixel saliency map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNet")]
pub struct PlNet {
    input_side: usize,
    layers: Vec<Layer>,
}

#[derive(Deserialize)]
struct RawNet {
    input_side: usize,
    layers: Vec<Layer>,
}

impl TryFrom<RawNet> for PlNet {
    type Error = Error;

    fn try_from(raw: RawNet) -> Result<Self> {
        Self::new(raw.input_side, raw.layers)
    }
}

impl PlNet {
    /// Checks that layer shapes chain and the output has one value per pixel.
    pub fn new(input_side: usize, layers: Vec<Layer>) -> Result<Self> {
        let n = input_side * input_side;
        if n == 0 {
            return Err(Error::InvalidArgument("image side must be positive".into()));
        }
        let mut len = n;
        for layer in &layers {
            len = layer.output_len(len)?;
        }
        if len != n {
            return Err(Error::InvalidArgument(format!(
                "network outputs {len} values for {n} pixels"
            )));
        }
        Ok(Self { input_side, layers })
    }

    /// Small fixed network: two affine+ReLU stages, a 2x2 max-pool and an
    /// affine per-pixel head, with weights drawn once from `N(0, 1/fan_in)`.
    pub fn desk(d: usize, seed: u64) -> Result<Self> {
        if d < 2 || !d.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "image side must be even and at least 2, got {d}"
            )));
        }
        let n = d * d;
        let pooled = (d / 2) * (d / 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut affine = |rows: usize, cols: usize| {
            let s = 1.0 / (cols as f64).sqrt();
            let w = DMatrix::from_fn(rows, cols, |_, _| {
                s * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            });
            let b = DVector::from_fn(rows, |_, _| {
                s * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            });
            Layer::Affine { w, b }
        };
        let layers = vec![
            affine(n, n),
            Layer::Relu,
            affine(n, n),
            Layer::Relu,
            Layer::max_pool(d, 2, 2)?,
            affine(n, pooled),
        ];
        Self::new(d, layers)
    }

    pub fn input_side(&self) -> usize {
        self.input_side
    }

    pub fn input_len(&self) -> usize {
        self.input_side * self.input_side
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Saliency map and the activation pattern that produced it.
    pub fn forward_with_pattern(
        &self,
        x: &DVector<f64>,
    ) -> Result<(DVector<f64>, ActivationPattern)> {
        if x.len() != self.input_len() {
            return Err(Error::InvalidArgument(format!(
                "image has {} pixels, network expects {}",
                x.len(),
                self.input_len()
            )));
        }
        let mut v = x.clone();
        let mut pattern = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            match layer {
                Layer::Affine { w, b } => {
                    v = w * v + b;
                    pattern.push(LayerPattern::Affine);
                }
                Layer::Relu => {
                    let on: Vec<bool> = v.iter().map(|&u| u > 0.0).collect();
                    v = DVector::from_fn(v.len(), |i, _| if on[i] { v[i] } else { 0.0 });
                    pattern.push(LayerPattern::Relu(on));
                }
                Layer::MaxPool {
                    side,
                    window,
                    stride,
                } => {
                    let wins = Layer::windows(*side, *window, *stride);
                    let winners: Vec<usize> = wins.iter().map(|w| argmax(w, |i| v[i])).collect();
                    v = DVector::from_fn(winners.len(), |k, _| v[winners[k]]);
                    pattern.push(LayerPattern::MaxPool(winners));
                }
            }
        }
        Ok((v, pattern))
    }

    /// Propagates `p + q r` through the net, fixing the pieces active at `r`
    /// and collecting the inequalities (`g(r) <= 0`) that keep them active.
    fn propagate(
        &self,
        line: &LineParam,
        r: f64,
    ) -> (
        DVector<f64>,
        DVector<f64>,
        ActivationPattern,
        Vec<QuadraticCoeffs>,
    ) {
        let mut p = line.a.clone();
        let mut q = line.b.clone();
        let mut pattern = Vec::with_capacity(self.layers.len());
        let mut cons = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Affine { w, b } => {
                    p = w * p + b;
                    q = w * q;
                    pattern.push(LayerPattern::Affine);
                }
                Layer::Relu => {
                    let mut on = Vec::with_capacity(p.len());
                    for i in 0..p.len() {
                        let active = p[i] + q[i] * r > 0.0;
                        on.push(active);
                        if active {
                            cons.push(QuadraticCoeffs::linear(-q[i], -p[i]));
                        } else {
                            cons.push(QuadraticCoeffs::linear(q[i], p[i]));
                            p[i] = 0.0;
                            q[i] = 0.0;
                        }
                    }
                    pattern.push(LayerPattern::Relu(on));
                }
                Layer::MaxPool {
                    side,
                    window,
                    stride,
                } => {
                    let wins = Layer::windows(*side, *window, *stride);
                    let mut winners = Vec::with_capacity(wins.len());
                    for w in &wins {
                        let k = argmax(w, |i| p[i] + q[i] * r);
                        for &l in w.iter().filter(|&&l| l != k) {
                            cons.push(QuadraticCoeffs::linear(q[l] - q[k], p[l] - p[k]));
                        }
                        winners.push(k);
                    }
                    p = DVector::from_fn(winners.len(), |k, _| p[winners[k]]);
                    q = DVector::from_fn(winners.len(), |k, _| q[winners[k]]);
                    pattern.push(LayerPattern::MaxPool(winners));
                }
            }
        }
        (p, q, pattern, cons)
    }
}

/// First index of the maximum of `f` over `idx`.
fn argmax(idx: &[usize], f: impl Fn(usize) -> f64) -> usize {
    let mut best = idx[0];
    let mut val = f(best);
    for &i in &idx[1..] {
        let v = f(i);
        if v > val {
            best = i;
            val = v;
        }
    }
    best
}

/// Salient (`O`) and non-salient (`B`) pixel sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SalientSplit {
    pub salient: Vec<usize>,
    pub background: Vec<usize>,
}

/// Membership of every pixel given the saliency map, without the
/// non-degeneracy check.
fn membership(saliency: &DVector<f64>, tau: f64) -> SalientSplit {
    let (salient, background) = (0..saliency.len()).partition(|&i| saliency[i] > tau);
    SalientSplit {
        salient,
        background,
    }
}

/// Pixels strictly above `tau` are salient; the rest (ties included) are not.
pub fn split_regions(saliency: &DVector<f64>, tau: f64) -> Result<SalientSplit> {
    let split = membership(saliency, tau);
    if split.salient.is_empty() || split.background.is_empty() {
        return Err(Error::DegenerateSplit(format!(
            "{} salient and {} non-salient pixels",
            split.salient.len(),
            split.background.len()
        )));
    }
    Ok(split)
}

/// Contrast between the mean of the salient and the non-salient pixels.
pub fn dnn_eta(split: &SalientSplit, n: usize) -> DVector<f64> {
    let mut eta = DVector::zeros(n);
    let wo = 1.0 / split.salient.len() as f64;
    let wb = 1.0 / split.background.len() as f64;
    for &i in &split.salient {
        eta[i] = wo;
    }
    for &i in &split.background {
        eta[i] = -wb;
    }
    eta
}

/// Selection oracle for thresholded network saliency along a line.
///
/// The region fixes the whole activation pattern and the split; the output
/// compared against the observation is the split alone.
#[derive(Debug, Clone)]
pub struct DnnOracle {
    net: PlNet,
    tau: f64,
    line: LineParam,
    observed: SalientSplit,
}

/// Saliency as an affine map `(p, q)` of the line position: `p + q r`.
pub type AffineScores = (DVector<f64>, DVector<f64>);

impl DnnOracle {
    pub fn new(net: PlNet, tau: f64, line: LineParam, observed: SalientSplit) -> Result<Self> {
        if line.dim() != net.input_len() {
            return Err(Error::InvalidArgument(
                "line dimension does not match the network".into(),
            ));
        }
        Ok(Self {
            net,
            tau,
            line,
            observed,
        })
    }

    /// Pattern, split and saliency as an affine map `p + q r` at position `r`,
    /// with the inequalities pinning them.
    pub fn piece(
        &self,
        r: f64,
    ) -> (
        ActivationPattern,
        SalientSplit,
        AffineScores,
        Vec<QuadraticCoeffs>,
    ) {
        let (p, q, pattern, mut cons) = self.net.propagate(&self.line, r);
        let s = &p + &q * r;
        let split = membership(&s, self.tau);
        for i in 0..p.len() {
            if s[i] > self.tau {
                cons.push(QuadraticCoeffs::linear(-q[i], self.tau - p[i]));
            } else {
                cons.push(QuadraticCoeffs::linear(q[i], p[i] - self.tau));
            }
        }
        (pattern, split, (p, q), cons)
    }
}

impl SelectionOracle for DnnOracle {
    type Output = Vec<usize>;

    fn query(&self, z: f64) -> Result<OracleResponse<Vec<usize>>> {
        let (_, split, _, cons) = self.piece(z);
        let mut region = IntervalUnion::real_line();
        for c in cons {
            region = region.intersect(&solve_quadratic_le(c));
        }
        let region = region
            .absorb_nearby(z, ABSORB_TOL)
            .ok_or(Error::OracleContract { z })?;
        let matches_observed = split == self.observed;
        Ok(OracleResponse {
            output_id: split.salient,
            oc_region: region,
            matches_observed,
        })
    }
}
