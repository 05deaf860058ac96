//! Cumulative integrals of the exit-time integrands.
//!
//! For a grid function `w` and `f(y) = c y + lambda w(S(y))` the exit-time
//! expectation needs
//!
//! ```text
//! Q(x) = eta(x) * int_0^x u2(y) dy,   u2 = 2 f psi / ((m1 - m2) sigma^2)
//! P(x) = psi(x) * int_x^1 u1(y) dy,   u1 = 2 f eta / ((m1 - m2) sigma^2)
//! ```
//!
//! Both integrals have integrable algebraic singularities (`y^(m1 - 2)` at 0
//! for `u2`, `(1 - y)^(-1 - m2)` at 1 for `u1`). Scaling by `eta(x)` and
//! `psi(x)` keeps every quantity `O(1)`: the recursions below only ever
//! multiply by ratios `eta(b) / eta(a) <= 1` and `psi(a) / psi(b) <= 1`.
//!
//! Integration runs over a mesh made of the grid knots and the preimages of
//! the knots under the jump map, so `f` is linear on every mesh cell. Each
//! cell is split into pieces no wider than their distance to `{0, 1}` and
//! every piece gets a 10-point Gauss-Legendre rule. The two cells touching a
//! singular endpoint are refined geometrically (ratio 1/2); the remaining
//! tail is dropped once its kernel mass is below `quadrature_tol` relative
//! to the cell, and is otherwise added in closed form with `f` frozen at the
//! endpoint once the pieces reach width `MIN_PIECE_WIDTH`.

use alloc::vec::Vec;

use crate::grid::{Grid, GridFunction};
use crate::math;
use crate::model::{jump_map, ModelParams, Roots};

/// Positive nodes of the 10-point Gauss-Legendre rule on `[-1, 1]`.
const GL_NODES: [f64; 5] = [
    0.148_874_338_981_631_22,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];

const GL_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_753,
    0.269_266_719_309_996_5,
    0.219_086_362_515_982,
    0.149_451_349_150_580_36,
    0.066_671_344_308_688_07,
];

/// Geometric refinement toward a singular endpoint stops at this width.
pub const MIN_PIECE_WIDTH: f64 = 1e-12;

/// Mesh breakpoints closer than this to an existing one are merged.
const MERGE_EPS: f64 = 1e-14;

/// 10-point Gauss-Legendre approximation of `int_a^b f`.
pub fn gauss_legendre(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
        acc += w * (f(mid - half * x) + f(mid + half * x));
    }
    acc * half
}

fn gl_points(a: f64, b: f64, mut emit: impl FnMut(f64, f64)) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
        emit(mid - half * x, w * half);
        emit(mid + half * x, w * half);
    }
}

/// Splits `[a, b]` (with `0 < a < b < 1`) into pieces whose width does not
/// exceed their distance to either endpoint of `[0, 1]`.
fn for_each_piece(a: f64, b: f64, emit: &mut impl FnMut(f64, f64)) {
    let width = b - a;
    if width > a && 2.0 * a < b {
        for_each_piece(a, 2.0 * a, emit);
        for_each_piece(2.0 * a, b, emit);
    } else if width > 1.0 - b && 2.0 * b - 1.0 > a {
        for_each_piece(a, 2.0 * b - 1.0, emit);
        for_each_piece(2.0 * b - 1.0, b, emit);
    } else if width > a.min(1.0 - b) {
        let m = 0.5 * (a + b);
        for_each_piece(a, m, emit);
        for_each_piece(m, b, emit);
    } else {
        emit(a, b);
    }
}

/// Which scaled integrand a weight belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    /// `eta(anchor) * u2 / f`, integrated from the left.
    Left,
    /// `psi(anchor) * u1 / f`, integrated from the right.
    Right,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    y: f64,
    wq: f64,
    wp: f64,
    /// Location of `S(y)` on the grid.
    cell: usize,
    t: f64,
}

/// Integration weights that depend on `(mu, lambda, p)` and the grid but not
/// on the cost `c` or on the integrated function `w`.
#[derive(Debug, Clone)]
pub(crate) struct KernelTables {
    grid: Grid,
    roots: Roots,
    lambda: f64,
    p: f64,
    /// `2 / ((m1 - m2) mu^2)`.
    scale: f64,
    quadrature_tol: f64,
    mesh: Vec<f64>,
    knot_index: Vec<usize>,
    nodes: Vec<Node>,
    /// Node range of every mesh cell.
    cells: Vec<(usize, usize)>,
    ratio_q: Vec<f64>,
    ratio_p: Vec<f64>,
}

/// `Q` and `P` at every mesh point for one `(w, c)`.
#[derive(Debug, Clone)]
pub(crate) struct Cumulative {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl KernelTables {
    pub fn new(params: &ModelParams, grid: Grid, quadrature_tol: f64) -> Self {
        let roots = params.roots();
        let knots = grid.knots();

        // Breakpoints: knots plus preimages of knots under the jump map.
        let mut mesh: Vec<f64> = knots.to_vec();
        if params.p < 1.0 {
            for &x in knots {
                if x > params.p && x < 1.0 {
                    mesh.push((x - params.p) / (1.0 - params.p));
                }
            }
        }
        mesh.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        let mut merged: Vec<f64> = Vec::with_capacity(mesh.len());
        for x in mesh {
            match merged.last() {
                Some(&last) if x - last <= MERGE_EPS => {}
                _ => merged.push(x),
            }
        }
        // Knots win over nearby preimages so every knot is an exact mesh point.
        let knot_index: Vec<usize> = knots
            .iter()
            .map(|&x| {
                let j = merged.partition_point(|&m| m < x - MERGE_EPS);
                merged[j] = x;
                j
            })
            .collect();

        let mut tables = Self {
            grid,
            roots,
            lambda: params.lambda,
            p: params.p,
            scale: 2.0 / (roots.wronskian() * params.mu * params.mu),
            quadrature_tol,
            mesh: merged,
            knot_index,
            nodes: Vec::new(),
            cells: Vec::new(),
            ratio_q: Vec::new(),
            ratio_p: Vec::new(),
        };
        tables.build_nodes();
        tables
    }

    fn build_nodes(&mut self) {
        let m = self.mesh.len();
        let mut nodes = Vec::new();
        let mut cells = Vec::with_capacity(m - 1);
        let mut ratio_q = alloc::vec![0.0; m - 1];
        let mut ratio_p = alloc::vec![0.0; m - 1];
        let roots = self.roots;
        for j in 0..m - 1 {
            let (a, b) = (self.mesh[j], self.mesh[j + 1]);
            let start = nodes.len();
            let mut push = |y: f64, wq: f64, wp: f64| {
                let (cell, t) = self.grid.locate(jump_map(y, self.p));
                nodes.push(Node { y, wq, wp, cell, t });
            };
            if j == 0 {
                self.emit_left_graded(b, b, &mut |y, w| push(y, w, 0.0));
            } else if j == m - 2 {
                self.emit_right_graded(a, a, &mut |y, w| push(y, 0.0, w));
            } else {
                let (ln_eta_b, ln_psi_a) = (roots.ln_eta(b), roots.ln_psi(a));
                for_each_piece(a, b, &mut |lo, hi| {
                    gl_points(lo, hi, |y, w| {
                        let base = self.ln_base(y);
                        let wq = w * self.scale * math::exp(ln_eta_b + roots.ln_psi(y) + base);
                        let wp = w * self.scale * math::exp(ln_psi_a + roots.ln_eta(y) + base);
                        push(y, wq, wp);
                    })
                });
                ratio_q[j] = math::exp(ln_eta_b - roots.ln_eta(a));
                ratio_p[j] = math::exp(ln_psi_a - roots.ln_psi(b));
            }
            cells.push((start, nodes.len()));
        }
        // The two boundary cells only feed one recursion each.
        if m > 2 {
            ratio_p[0] = 0.0;
            ratio_q[m - 2] = 0.0;
        }
        self.nodes = nodes;
        self.cells = cells;
        self.ratio_q = ratio_q;
        self.ratio_p = ratio_p;
    }

    /// `-2 ln(y (1 - y))`: the `1 / sigma^2` factor without `mu^2`.
    #[inline]
    fn ln_base(&self, y: f64) -> f64 {
        -2.0 * (math::ln(y) + math::ln(1.0 - y))
    }

    #[inline]
    fn kernel(&self, side: Side, y: f64, anchor: f64) -> f64 {
        let r = &self.roots;
        let ln = match side {
            Side::Left => r.ln_eta(anchor) + r.ln_psi(y),
            Side::Right => r.ln_psi(anchor) + r.ln_eta(y),
        };
        self.scale * math::exp(ln + self.ln_base(y))
    }

    /// Weights for `int_0^b eta(anchor) u2 / f`, refined toward 0. The
    /// closed-form tail, when kept, is emitted as a node at `y = 0`.
    fn emit_left_graded(&self, b: f64, anchor: f64, emit: &mut impl FnMut(f64, f64)) {
        let roots = self.roots;
        let ln_eta_anchor = roots.ln_eta(anchor);
        let denom = self.lambda * roots.wronskian();
        // Kernel mass of [0, d]: eta(anchor) psi'(d) / (lambda (m1 - m2)).
        let tail = |d: f64| math::exp(ln_eta_anchor + roots.ln_psi(d)) * roots.psi_log_slope(d) / denom;
        let mut mass = 0.0;
        let mut hi = b;
        loop {
            let lo = 0.5 * hi;
            let t = tail(hi);
            if t <= self.quadrature_tol * (mass + t) {
                return;
            }
            if hi - lo <= MIN_PIECE_WIDTH {
                emit(0.0, t);
                return;
            }
            for_each_piece(lo, hi, &mut |a, b| {
                gl_points(a, b, |y, w| {
                    let k = w * self.kernel(Side::Left, y, anchor);
                    mass += k;
                    emit(y, k);
                })
            });
            hi = lo;
        }
    }

    /// Weights for `int_a^1 psi(anchor) u1 / f`, refined toward 1. The
    /// closed-form tail, when kept, is emitted as a node at `y = 1`.
    fn emit_right_graded(&self, a: f64, anchor: f64, emit: &mut impl FnMut(f64, f64)) {
        let roots = self.roots;
        let ln_psi_anchor = roots.ln_psi(anchor);
        let denom = self.lambda * roots.wronskian();
        // Kernel mass of [1 - d, 1]: -psi(anchor) eta'(1 - d) / (lambda (m1 - m2)).
        let tail = |d: f64| {
            let y = 1.0 - d;
            -math::exp(ln_psi_anchor + roots.ln_eta(y)) * roots.eta_log_slope(y) / denom
        };
        let mut mass = 0.0;
        let mut dist = 1.0 - a;
        loop {
            let t = tail(dist);
            if t <= self.quadrature_tol * (mass + t) {
                return;
            }
            let half = 0.5 * dist;
            if half <= MIN_PIECE_WIDTH {
                emit(1.0, t);
                return;
            }
            for_each_piece(1.0 - dist, 1.0 - half, &mut |lo, hi| {
                gl_points(lo, hi, |y, w| {
                    let k = w * self.kernel(Side::Right, y, anchor);
                    mass += k;
                    emit(y, k);
                })
            });
            dist = half;
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mesh(&self) -> &[f64] {
        &self.mesh
    }

    /// Mesh index of grid knot `i`.
    pub fn knot_index(&self, i: usize) -> usize {
        self.knot_index[i]
    }

    #[inline]
    fn integrand_factor(&self, w: &GridFunction, c: f64, node: &Node) -> f64 {
        c * node.y + self.lambda * w.interpolate(node.cell, node.t)
    }

    /// `f(y) = c y + lambda w(S(y))` at an arbitrary point.
    #[inline]
    pub fn forcing(&self, w: &GridFunction, c: f64, y: f64) -> f64 {
        c * y + self.lambda * w.eval(jump_map(y, self.p))
    }

    pub fn cumulative(&self, w: &GridFunction, c: f64) -> Cumulative {
        let m = self.mesh.len();
        let f: Vec<f64> = self
            .nodes
            .iter()
            .map(|n| self.integrand_factor(w, c, n))
            .collect();
        let cell_sum = |j: usize, left: bool| -> f64 {
            let (s, e) = self.cells[j];
            self.nodes[s..e]
                .iter()
                .zip(&f[s..e])
                .map(|(n, fv)| if left { n.wq * fv } else { n.wp * fv })
                .sum()
        };
        let mut q = alloc::vec![f64::NAN; m];
        for j in 0..m - 1 {
            let prev = if j == 0 { 0.0 } else { self.ratio_q[j] * q[j] };
            q[j + 1] = prev + cell_sum(j, true);
        }
        let mut p = alloc::vec![f64::NAN; m];
        for j in (1..m - 1).rev() {
            let next = if j == m - 2 { 0.0 } else { self.ratio_p[j] * p[j + 1] };
            p[j] = next + cell_sum(j, false);
        }
        Cumulative { q, p }
    }

    #[inline]
    fn mesh_cell(&self, x: f64) -> usize {
        let m = self.mesh.len();
        self.mesh.partition_point(|&v| v <= x).clamp(1, m - 1) - 1
    }

    /// `Q(x) = eta(x) int_0^x u2` for `x` in `(0, 1)`.
    pub fn q_at(&self, cum: &Cumulative, w: &GridFunction, c: f64, x: f64) -> f64 {
        let j = self.mesh_cell(x);
        let mut acc = 0.0;
        if j == 0 {
            self.emit_left_graded(x, x, &mut |y, k| acc += k * self.forcing(w, c, y));
            return acc;
        }
        let a = self.mesh[j];
        if x == a {
            return cum.q[j];
        }
        for_each_piece(a, x, &mut |lo, hi| {
            acc += gauss_legendre(lo, hi, |y| {
                self.kernel(Side::Left, y, x) * self.forcing(w, c, y)
            })
        });
        acc + math::exp(self.roots.ln_eta(x) - self.roots.ln_eta(a)) * cum.q[j]
    }

    /// `P(x) = psi(x) int_x^1 u1` for `x` in `(0, 1)`.
    pub fn p_at(&self, cum: &Cumulative, w: &GridFunction, c: f64, x: f64) -> f64 {
        let m = self.mesh.len();
        let j = self.mesh_cell(x);
        if x == self.mesh[j] && j > 0 {
            return cum.p[j];
        }
        let mut acc = 0.0;
        if j == m - 2 {
            self.emit_right_graded(x, x, &mut |y, k| acc += k * self.forcing(w, c, y));
            return acc;
        }
        let b = self.mesh[j + 1];
        for_each_piece(x, b, &mut |lo, hi| {
            acc += gauss_legendre(lo, hi, |y| {
                self.kernel(Side::Right, y, x) * self.forcing(w, c, y)
            })
        });
        acc + math::exp(self.roots.ln_psi(x) - self.roots.ln_psi(b)) * cum.p[j + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_to_degree_19() {
        let got = gauss_legendre(-1.0, 1.0, |x| libm::pow(x, 18.0));
        assert!((got - 2.0 / 19.0).abs() < 1e-15);
        let got = gauss_legendre(0.0, 2.0, |x| libm::pow(x, 19.0) + x);
        assert!((got - (libm::pow(2.0, 20.0) / 20.0 + 2.0)).abs() < 1e-9);
        let weights: f64 = GL_WEIGHTS.iter().sum();
        assert!((2.0 * weights - 2.0).abs() < 1e-15);
    }

    #[test]
    fn pieces_respect_endpoint_distance() {
        let mut pieces = Vec::new();
        for_each_piece(1e-6, 0.9999, &mut |a, b| pieces.push((a, b)));
        assert_eq!(pieces.first().unwrap().0, 1e-6);
        assert_eq!(pieces.last().unwrap().1, 0.9999);
        for w in pieces.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
        for &(a, b) in &pieces {
            assert!(b - a <= a.min(1.0 - b) * (1.0 + 1e-12), "{a} {b}");
        }
    }

    #[test]
    fn power_singularity_integrates_accurately() {
        // int_0^x y^(m1 - 2) dy for m1 close to 1 has an O(1) tail below any
        // reachable piece width; the closed-form tail must capture it.
        let params = ModelParams::new(3.0, 0.05, 0.5, 0.0, 0.0).unwrap();
        let grid = Grid::cosine(41).unwrap();
        let tables = KernelTables::new(&params, grid.clone(), 1e-10);
        let one = grid.tabulate(|_| 1.0 / params.lambda);
        let cum = tables.cumulative(&one, 0.0);
        // With f = 1: (m1 - m2) Q(x) = eta(x) psi'(x) / lambda = (m1 - x) / lambda.
        let roots = params.roots();
        for i in 1..grid.len() - 1 {
            let x = grid.knots()[i];
            let q = cum.q[tables.knot_index(i)];
            let exact = (roots.m1 - x) / (params.lambda * roots.wronskian());
            assert!((q - exact).abs() < 1e-10 * exact, "x={x} q={q} exact={exact}");
            let qa = tables.q_at(&cum, &one, 0.0, 0.5 * x);
            let exact = (roots.m1 - 0.5 * x) / (params.lambda * roots.wronskian());
            assert!((qa - exact).abs() < 1e-10 * exact);
        }
    }

    #[test]
    fn right_scaled_integral_of_constant() {
        // With f = 1: (m1 - m2) P(x) = -psi(x) eta'(x) / lambda = (x - m2) / lambda.
        let params = ModelParams::figure1();
        let grid = Grid::cosine(201).unwrap();
        let tables = KernelTables::new(&params, grid.clone(), 1e-13);
        let one = grid.tabulate(|_| 1.0 / params.lambda);
        let cum = tables.cumulative(&one, 0.0);
        let roots = params.roots();
        for i in 1..grid.len() - 1 {
            let x = grid.knots()[i];
            let exact = (x - roots.m2) / (params.lambda * roots.wronskian());
            let got = cum.p[tables.knot_index(i)];
            assert!((got - exact).abs() < 1e-11, "x={x} got={got} exact={exact}");
            let y = x + 0.3 * (grid.knots()[i + 1] - x);
            let exact = (y - roots.m2) / (params.lambda * roots.wronskian());
            assert!((tables.p_at(&cum, &one, 0.0, y) - exact).abs() < 1e-11);
        }
    }

    #[test]
    fn mesh_contains_knots_and_jump_preimages() {
        let params = ModelParams::figure1();
        let grid = Grid::uniform(11).unwrap();
        let tables = KernelTables::new(&params, grid.clone(), 1e-10);
        for (i, &x) in grid.knots().iter().enumerate() {
            assert_eq!(tables.mesh()[tables.knot_index(i)], x);
        }
        // Knots 0.6..0.9 map back to 0.2..0.8, which are knots already, so
        // only exact duplicates appear and get merged.
        assert_eq!(tables.mesh().len(), 11);
        let grid = Grid::cosine(11).unwrap();
        let tables = KernelTables::new(&params, grid, 1e-10);
        assert!(tables.mesh().len() > 11);
    }
}
