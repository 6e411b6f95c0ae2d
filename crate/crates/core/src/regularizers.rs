//! Separable non-convex sparsity penalties.
//!
//! Two scalar penalties are provided, the minimax concave penalty (MCP) and
//! the smoothly clipped absolute deviation (SCAD). A [`Regularizer`] applies a
//! scalar penalty coordinatewise over one or more disjoint blocks of the
//! decision vector, so `g(v, z) = g1(v) + g2(z)` is expressed as two blocks.
//!
//! The proximal operator of either penalty is the solution of a scalar
//! non-convex problem
//!
//! ```text
//! min_x  (x - w)^2 / (2 lambda) + p(x)
//! ```
//!
//! which is solved exactly by enumerating the stationary point of each
//! piecewise region (clipped to the region) together with the region
//! endpoints, and taking the best candidate. Ties are broken towards the
//! candidate of smallest magnitude.

use ndarray::{Array1, ArrayView1, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};

/// Relative tolerance under which two prox candidates are considered tied.
const TIE_TOL: f64 = 1e-12;

/// Minimax concave penalty `kappa * int_0^|x| max(0, 1 - u / (nu kappa)) du`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct McpParams {
    kappa: f64,
    nu: f64,
}

impl McpParams {
    pub fn new(kappa: f64, nu: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return invalid(format!("MCP kappa must be positive, got {kappa}"));
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return invalid(format!("MCP nu must be positive, got {nu}"));
        }
        Ok(McpParams { kappa, nu })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
}

/// Smoothly clipped absolute deviation penalty, `nu > 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ScadParams {
    kappa: f64,
    nu: f64,
}

impl ScadParams {
    pub fn new(kappa: f64, nu: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return invalid(format!("SCAD kappa must be positive, got {kappa}"));
        }
        if !(nu > 2.0 && nu.is_finite()) {
            return invalid(format!("SCAD nu must be greater than 2, got {nu}"));
        }
        Ok(ScadParams { kappa, nu })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
}

/// Unvalidated `(kappa, nu)` as read from a config file.
#[derive(Deserialize)]
struct RawParams {
    kappa: f64,
    nu: f64,
}

impl TryFrom<RawParams> for McpParams {
    type Error = crate::error::Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        McpParams::new(raw.kappa, raw.nu)
    }
}

impl TryFrom<RawParams> for ScadParams {
    type Error = crate::error::Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        ScadParams::new(raw.kappa, raw.nu)
    }
}

/// A scalar penalty applied to every coordinate of a block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Penalty {
    Zero,
    Mcp(McpParams),
    Scad(ScadParams),
}

impl Penalty {
    /// Scalar penalty value.
    pub fn value(&self, x: f64) -> f64 {
        let a = x.abs();
        match *self {
            Penalty::Zero => 0.0,
            Penalty::Mcp(McpParams { kappa, nu }) => {
                if a <= nu * kappa {
                    kappa * a - a * a / (2.0 * nu)
                } else {
                    nu * kappa * kappa / 2.0
                }
            }
            Penalty::Scad(ScadParams { kappa, nu }) => {
                if a <= kappa {
                    kappa * a
                } else if a <= nu * kappa {
                    (-a * a + 2.0 * nu * kappa * a - kappa * kappa) / (2.0 * (nu - 1.0))
                } else {
                    (nu + 1.0) * kappa * kappa / 2.0
                }
            }
        }
    }

    /// Derivative at `x`, or `None` at the kink `x = 0` of a non-zero penalty.
    pub fn derivative(&self, x: f64) -> Option<f64> {
        let a = x.abs();
        let s = x.signum();
        match *self {
            Penalty::Zero => Some(0.0),
            _ if x == 0.0 => None,
            Penalty::Mcp(McpParams { kappa, nu }) => Some(if a <= nu * kappa { s * (kappa - a / nu) } else { 0.0 }),
            Penalty::Scad(ScadParams { kappa, nu }) => Some(if a <= kappa {
                s * kappa
            } else if a <= nu * kappa {
                s * (nu * kappa - a) / (nu - 1.0)
            } else {
                0.0
            }),
        }
    }

    /// Lipschitz constant of the scalar penalty (`kappa` for both MCP and SCAD).
    pub fn lipschitz(&self) -> f64 {
        match *self {
            Penalty::Zero => 0.0,
            Penalty::Mcp(p) => p.kappa,
            Penalty::Scad(p) => p.kappa,
        }
    }

    /// Exact scalar proximal point `argmin_x (x - w)^2 / (2 lambda) + p(x)`.
    ///
    /// `lambda` must be positive; this is checked by the vector-level callers.
    pub fn prox(&self, lambda: f64, w: f64) -> f64 {
        let a = w.abs();
        let mut cands = [f64::NAN; 6];
        let mut len = 0;
        let mut push = |x: f64| {
            if x.is_finite() {
                cands[len] = x;
                len += 1;
            }
        };
        match *self {
            Penalty::Zero => return w,
            Penalty::Mcp(McpParams { kappa, nu }) => {
                let knee = nu * kappa;
                push(0.0);
                push(knee);
                // concave region [0, nu kappa]: stationary point of the
                // quadratic model, only meaningful when lambda != nu
                if nu != lambda {
                    push((nu * (a - lambda * kappa) / (nu - lambda)).clamp(0.0, knee));
                }
                push(a.max(knee));
            }
            Penalty::Scad(ScadParams { kappa, nu }) => {
                let knee = nu * kappa;
                push(0.0);
                push(kappa);
                push(knee);
                push((a - lambda * kappa).clamp(0.0, kappa));
                let denom = (nu - 1.0) - lambda;
                if denom != 0.0 {
                    push((((nu - 1.0) * a - lambda * knee) / denom).clamp(kappa, knee));
                }
                push(a.max(knee));
            }
        }

        let objective = |x: f64| (x - a) * (x - a) / (2.0 * lambda) + self.value(x);
        let mut best = cands[0];
        let mut best_val = objective(best);
        for &x in &cands[1..len] {
            let v = objective(x);
            let tol = TIE_TOL * best_val.abs().max(1.0);
            if v < best_val - tol || (v <= best_val + tol && x.abs() < best.abs()) {
                best = x;
                best_val = v;
            }
        }
        if best == 0.0 {
            0.0
        } else {
            best.copysign(w)
        }
    }
}

/// One contiguous block `[offset, offset + len)` carrying its own penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub offset: usize,
    pub len: usize,
    pub penalty: Penalty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularizerKind {
    Zero,
    Mcp,
    Scad,
    BlockComposite,
}

/// Separable regularizer `g(w) = sum_i p_i(w_i)` over a fixed dimension.
///
/// Coordinates outside every block carry no penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct Regularizer {
    dim: usize,
    blocks: Vec<Block>,
}

/// Proximal point together with the Moreau envelope value attained there.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxResult {
    pub zeta: Array1<f64>,
    pub envelope_value: f64,
}

impl Regularizer {
    pub fn zero(dim: usize) -> Self {
        Regularizer { dim, blocks: Vec::new() }
    }

    /// The same penalty on every coordinate.
    pub fn uniform(penalty: Penalty, dim: usize) -> Self {
        if penalty == Penalty::Zero || dim == 0 {
            return Regularizer::zero(dim);
        }
        Regularizer { dim, blocks: vec![Block { offset: 0, len: dim, penalty }] }
    }

    pub fn mcp(params: McpParams, dim: usize) -> Self {
        Regularizer::uniform(Penalty::Mcp(params), dim)
    }

    pub fn scad(params: ScadParams, dim: usize) -> Self {
        Regularizer::uniform(Penalty::Scad(params), dim)
    }

    /// Composite of disjoint blocks. Blocks are sorted by offset; overlapping
    /// or out-of-range blocks are rejected.
    pub fn block_composite(dim: usize, mut blocks: Vec<Block>) -> Result<Self> {
        blocks.retain(|b| b.len > 0);
        blocks.sort_by_key(|b| b.offset);
        let mut end = 0;
        for b in &blocks {
            if b.offset < end {
                return invalid(format!("regularizer block at offset {} overlaps its predecessor", b.offset));
            }
            end = b.offset + b.len;
            if end > dim {
                return invalid(format!("regularizer block [{}, {end}) exceeds dimension {dim}", b.offset));
            }
        }
        Ok(Regularizer { dim, blocks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn kind(&self) -> RegularizerKind {
        match self.blocks.as_slice() {
            [] => RegularizerKind::Zero,
            [b] if b.offset == 0 && b.len == self.dim => match b.penalty {
                Penalty::Zero => RegularizerKind::Zero,
                Penalty::Mcp(_) => RegularizerKind::Mcp,
                Penalty::Scad(_) => RegularizerKind::Scad,
            },
            _ => RegularizerKind::BlockComposite,
        }
    }

    /// Penalty acting on coordinate `i`.
    pub fn penalty_at(&self, i: usize) -> Penalty {
        self.blocks.iter().find(|b| i >= b.offset && i < b.offset + b.len).map_or(Penalty::Zero, |b| b.penalty)
    }

    pub fn value(&self, w: ArrayView1<f64>) -> Result<f64> {
        check_dim(self.dim, w.len())?;
        Ok(self.value_unchecked(w))
    }

    pub(crate) fn value_unchecked(&self, w: ArrayView1<f64>) -> f64 {
        self.blocks.iter().map(|b| w.iter().skip(b.offset).take(b.len).map(|&x| b.penalty.value(x)).sum::<f64>()).sum()
    }

    /// Proximal point of `lambda * g` at `w` and the Moreau envelope value.
    ///
    /// The envelope value is recomputed from the returned point, so the two
    /// always agree.
    pub fn prox(&self, lambda: f64, w: ArrayView1<f64>) -> Result<ProxResult> {
        check_dim(self.dim, w.len())?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return invalid(format!("prox parameter lambda must be positive, got {lambda}"));
        }
        let mut zeta = w.to_owned();
        for b in &self.blocks {
            for z in zeta.iter_mut().skip(b.offset).take(b.len) {
                *z = b.penalty.prox(lambda, *z);
            }
        }
        let mut dist_sq = 0.0;
        Zip::from(&w).and(&zeta).for_each(|&a, &b| dist_sq += (a - b) * (a - b));
        let envelope_value = dist_sq / (2.0 * lambda) + self.value_unchecked(zeta.view());
        Ok(ProxResult { zeta, envelope_value })
    }

    /// Moreau envelope `e_lambda g(w)`.
    pub fn moreau_envelope(&self, lambda: f64, w: ArrayView1<f64>) -> Result<f64> {
        Ok(self.prox(lambda, w)?.envelope_value)
    }

    /// Lipschitz constant of `g` in the Euclidean norm.
    ///
    /// A block of length `len` with scalar constant `kappa` is
    /// `kappa * sqrt(len)`-Lipschitz; disjoint blocks combine as the
    /// Euclidean norm of the block constants.
    pub fn lipschitz(&self) -> f64 {
        self.blocks.iter().map(|b| b.penalty.lipschitz().powi(2) * b.len as f64).sum::<f64>().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    fn mcp(kappa: f64, nu: f64) -> Penalty {
        Penalty::Mcp(McpParams::new(kappa, nu).unwrap())
    }

    fn scad(kappa: f64, nu: f64) -> Penalty {
        Penalty::Scad(ScadParams::new(kappa, nu).unwrap())
    }

    /// Dense grid minimizer of the scalar prox subproblem.
    fn grid_prox(p: Penalty, lambda: f64, w: f64, lo: f64, hi: f64, points: usize) -> (f64, f64) {
        let mut best = (f64::NAN, f64::INFINITY);
        for i in 0..points {
            let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            let v = (x - w).powi(2) / (2.0 * lambda) + p.value(x);
            if v < best.1 {
                best = (x, v);
            }
        }
        best
    }

    #[test]
    fn parameter_validation() {
        assert!(McpParams::new(0.0, 1.0).is_err());
        assert!(McpParams::new(1.0, -1.0).is_err());
        assert!(ScadParams::new(1.0, 2.0).is_err());
        assert!(ScadParams::new(-1.0, 3.0).is_err());
        assert!(ScadParams::new(1.0, 2.5).is_ok());
    }

    #[test]
    fn values_on_each_branch() {
        assert_eq!(mcp(1.0, 1.0).value(0.0), 0.0);
        assert_eq!(mcp(1.0, 1.0).value(2.0), 0.5);
        assert_eq!(mcp(1.0, 1.0).value(1.0), 0.5);
        assert_eq!(scad(1.0, 3.0).value(0.5), 0.5);
        // middle branch and the constant branch meet continuously
        let p = scad(1.0, 3.0);
        assert_relative_eq!(p.value(3.0), 2.0, epsilon = 1e-15);
        assert_relative_eq!(p.value(3.0 + 1e-12), 2.0, epsilon = 1e-11);
        assert_relative_eq!(p.value(-2.0), (-4.0 + 12.0 - 1.0) / 4.0, epsilon = 1e-15);
    }

    #[test]
    fn value_matches_integral_definition() {
        // midpoint rule on the integral forms of both penalties
        let integrate = |density: &dyn Fn(f64) -> f64, a: f64| {
            let steps = 200_000;
            let h = a / steps as f64;
            (0..steps).map(|i| density((i as f64 + 0.5) * h) * h).sum::<f64>()
        };
        let (k, nu) = (1.0, 1.0);
        let mcp_density = |u: f64| k * (1.0 - u / (nu * k)).max(0.0);
        for &x in &[0.3, 1.0, 1.7] {
            assert_relative_eq!(mcp(k, nu).value(x), integrate(&mcp_density, x), epsilon = 1e-8);
        }
        let (k, nu) = (0.7, 3.7);
        let scad_density = |u: f64| k * (1.0f64).min((nu * k - u).max(0.0) / ((nu - 1.0) * k));
        for &x in &[0.3, 1.2, 2.5, 4.0] {
            assert_relative_eq!(scad(k, nu).value(x), integrate(&scad_density, x), epsilon = 1e-8);
        }
    }

    #[test]
    fn prox_examples() {
        let reg = Regularizer::mcp(McpParams::new(1.0, 1.0).unwrap(), 1);
        let r = reg.prox(0.1, array![3.0].view()).unwrap();
        assert_eq!(r.zeta, array![3.0]);
        assert_relative_eq!(r.envelope_value, 0.5, epsilon = 1e-15);
        assert_relative_eq!(reg.moreau_envelope(0.1, array![3.0].view()).unwrap(), 0.5);

        let reg = Regularizer::scad(ScadParams::new(0.5, 3.0).unwrap(), 1);
        assert_eq!(reg.prox(0.2, array![0.05].view()).unwrap().zeta, array![0.0]);

        for reg in [
            Regularizer::zero(3),
            Regularizer::mcp(McpParams::new(2.0, 1.5).unwrap(), 3),
            Regularizer::scad(ScadParams::new(0.5, 3.7).unwrap(), 3),
        ] {
            let r = reg.prox(0.7, Array1::zeros(3).view()).unwrap();
            assert_eq!(r.zeta, Array1::zeros(3));
            assert_eq!(r.envelope_value, 0.0);
        }
    }

    #[test]
    fn prox_examples_agree_with_grid() {
        let (x, _) = grid_prox(mcp(1.0, 1.0), 0.1, 3.0, -6.0, 6.0, 1_000_001);
        assert!((x - 3.0).abs() < 1e-4);
        let (x, _) = grid_prox(scad(0.5, 3.0), 0.2, 0.05, -6.0, 6.0, 1_000_001);
        assert!(x.abs() < 1e-4);
    }

    #[test]
    fn prox_rejects_bad_lambda_and_dimension() {
        let reg = Regularizer::zero(2);
        assert!(reg.prox(0.0, array![1.0, 2.0].view()).is_err());
        assert!(reg.prox(-1.0, array![1.0, 2.0].view()).is_err());
        assert!(reg.prox(1.0, array![1.0].view()).is_err());
        assert!(reg.value(array![1.0].view()).is_err());
    }

    #[test]
    fn mcp_threshold_tie_goes_to_zero() {
        // lambda > nu: hard thresholding. At w = sqrt(lambda * nu) * kappa the
        // candidates 0 and w have equal objective.
        let p = mcp(1.0, 1.0);
        let lambda = 4.0;
        let w = (lambda * 1.0f64).sqrt();
        let q = |x: f64| (x - w).powi(2) / (2.0 * lambda) + p.value(x);
        assert!((q(0.0) - q(w)).abs() < 1e-12);
        assert_eq!(p.prox(lambda, w), 0.0);
        assert_eq!(p.prox(lambda, -w), 0.0);
        assert!(p.prox(lambda, w + 1e-6) > 0.0);
    }

    #[test]
    fn scad_degenerate_middle_branch() {
        // lambda == nu - 1 makes the middle-region model linear
        let p = scad(1.0, 3.0);
        for &w in &[0.5, 1.5, 2.0, 2.5, 3.5, 5.0] {
            let x = p.prox(2.0, w);
            let (_, gv) = grid_prox(p, 2.0, w, -8.0, 8.0, 400_001);
            let v = (x - w).powi(2) / 4.0 + p.value(x);
            assert!(v <= gv + 1e-9, "w={w} x={x} v={v} grid={gv}");
        }
    }

    #[test]
    fn lipschitz_constants() {
        let m = Regularizer::mcp(McpParams::new(1.0, 1.0).unwrap(), 4);
        assert_eq!(m.lipschitz(), 2.0);
        assert_eq!(Regularizer::zero(7).lipschitz(), 0.0);
        let composite = Regularizer::block_composite(
            25,
            vec![
                Block { offset: 0, len: 9, penalty: mcp(1.0, 1.0) },
                Block { offset: 9, len: 16, penalty: scad(2.0, 3.0) },
            ],
        )
        .unwrap();
        assert_eq!(composite.kind(), RegularizerKind::BlockComposite);
        assert_relative_eq!(composite.lipschitz(), 73f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn block_composite_lipschitz_holds_empirically() {
        use rand::{Rng, SeedableRng};
        let reg = Regularizer::block_composite(
            25,
            vec![
                Block { offset: 0, len: 9, penalty: mcp(1.0, 1.0) },
                Block { offset: 9, len: 16, penalty: scad(2.0, 3.0) },
            ],
        )
        .unwrap();
        let l = reg.lipschitz();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut worst: f64 = 0.0;
        for _ in 0..100_000 {
            let u = Array1::from_shape_fn(25, |_| rng.random_range(-8.0..8.0));
            // small perturbations probe the steepest local slopes
            let scale = if rng.random_bool(0.5) { 1e-3 } else { 3.0 };
            let w = &u + &Array1::from_shape_fn(25, |_| rng.random_range(-scale..scale));
            let ratio = (reg.value(u.view()).unwrap() - reg.value(w.view()).unwrap()).abs()
                / (&u - &w).mapv(|x| x * x).sum().sqrt();
            worst = worst.max(ratio);
        }
        assert!(worst <= l * (1.0 + 1e-12), "worst={worst} bound={l}");
    }

    #[test]
    fn block_validation() {
        let b = |offset, len| Block { offset, len, penalty: mcp(1.0, 1.0) };
        assert!(Regularizer::block_composite(4, vec![b(0, 3), b(2, 2)]).is_err());
        assert!(Regularizer::block_composite(4, vec![b(2, 3)]).is_err());
        let r = Regularizer::block_composite(6, vec![b(4, 2), b(0, 2)]).unwrap();
        assert_eq!(r.penalty_at(3), Penalty::Zero);
        assert_eq!(r.penalty_at(5), mcp(1.0, 1.0));
        let w = array![3.0, 3.0, 3.0, 3.0, 3.0, 3.0];
        // uncovered coordinates pass through the prox untouched
        let z = r.prox(0.1, w.view()).unwrap().zeta;
        assert_eq!(z[2], 3.0);
        assert_relative_eq!(r.value(w.view()).unwrap(), 4.0 * 0.5);
    }

    #[test]
    fn kinds() {
        assert_eq!(Regularizer::zero(3).kind(), RegularizerKind::Zero);
        assert_eq!(Regularizer::uniform(Penalty::Zero, 3).kind(), RegularizerKind::Zero);
        assert_eq!(Regularizer::uniform(mcp(1.0, 2.0), 3).kind(), RegularizerKind::Mcp);
        assert_eq!(Regularizer::uniform(scad(1.0, 3.0), 3).kind(), RegularizerKind::Scad);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn penalty() -> impl Strategy<Value = Penalty> {
            prop_oneof![
                (0.05f64..3.0, 0.2f64..4.0).prop_map(|(k, n)| mcp(k, n)),
                (0.05f64..3.0, 2.05f64..6.0).prop_map(|(k, n)| scad(k, n)),
            ]
        }

        proptest! {
            #[test]
            fn prox_is_odd(p in penalty(), lambda in 0.01f64..5.0, w in -20.0f64..20.0) {
                prop_assert_eq!(p.prox(lambda, -w), -p.prox(lambda, w) + 0.0);
            }

            #[test]
            fn prox_beats_neighbours(p in penalty(), lambda in 0.01f64..5.0, w in -20.0f64..20.0) {
                let x = p.prox(lambda, w);
                let q = |x: f64| (x - w).powi(2) / (2.0 * lambda) + p.value(x);
                let v = q(x);
                for dx in [1e-3, 1e-2, 0.1, 1.0] {
                    prop_assert!(v <= q(x + dx) + 1e-12);
                    prop_assert!(v <= q(x - dx) + 1e-12);
                }
                prop_assert!(v <= q(0.0) + 1e-12);
                prop_assert!(v <= q(w) + 1e-12);
            }

            #[test]
            fn prox_shrinks_towards_zero(p in penalty(), lambda in 0.01f64..5.0, w in -20.0f64..20.0) {
                let x = p.prox(lambda, w);
                prop_assert!(x.abs() <= w.abs());
                prop_assert!(x == 0.0 || x.signum() == w.signum());
            }

            #[test]
            fn envelope_bounds(p in penalty(), lambda in 0.01f64..5.0,
                               w in proptest::collection::vec(-10.0f64..10.0, 1..8)) {
                let reg = Regularizer::uniform(p, w.len());
                let w = Array1::from(w);
                let r = reg.prox(lambda, w.view()).unwrap();
                let g = reg.value(w.view()).unwrap();
                let l = reg.lipschitz();
                prop_assert!(r.envelope_value <= g + 1e-12);
                let disp = (&w - &r.zeta).mapv(|x| x * x).sum().sqrt();
                prop_assert!(disp <= 2.0 * l * lambda + 1e-12);
                prop_assert!(g - r.envelope_value <= l * l * lambda / 2.0 + 1e-12);
            }
        }
    }
}
