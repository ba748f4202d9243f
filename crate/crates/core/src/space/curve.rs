//! Polyline samples of the oscillating curve `y = x^a sin(pi log2 x)` on
//! `[0, 1]` with arc-length measure.

use crate::error::{Error, Result};

use super::{Edge, EnergyModel, Space, VertexSet};

#[derive(Clone, Debug)]
pub struct BallCheck {
    pub k: u32,
    pub radius: f64,
    /// Number of graph components of the vertices inside `B((2^-k, 0), r)`.
    pub components: usize,
    pub disconnected: bool,
    /// Dilation `2^(k(1-a)-1)`.
    pub dilation: f64,
    /// Whether the ball lies inside a single component of the dilated ball.
    pub within_one_dilated_component: bool,
}

#[derive(Clone, Debug)]
pub struct CurveGraph {
    pub space: Space,
    pub alpha: f64,
    pub resolution: f64,
    /// Total polyline length.
    pub length: f64,
    /// Arc-length parameter of every vertex, starting at the origin.
    pub arc: Vec<f64>,
    pub balls: Vec<BallCheck>,
}

fn curve_y(x: f64, alpha: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x.powf(alpha) * (std::f64::consts::PI * x.log2()).sin()
    }
}

/// Samples the curve with spacing at most `resolution` in `x` on every dyadic
/// block `[2^-(k+1), 2^-k]` down to the block containing `resolution`, with at
/// least 64 samples per block, then joins the first sample to the origin.
pub fn build_curve_graph(alpha: f64, resolution: f64) -> Result<CurveGraph> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Constraint(format!(
            "curve exponent must lie in (0, 1), got {alpha}"
        )));
    }
    if !(resolution > 0.0 && resolution < 0.5) {
        return Err(Error::Constraint(format!(
            "resolution must lie in (0, 1/2), got {resolution}"
        )));
    }
    let k_max = (1.0 / resolution).log2().ceil() as i32;
    let mut xs = vec![0.0];
    for k in (0..=k_max).rev() {
        let lo = 2f64.powi(-k - 1);
        let hi = 2f64.powi(-k);
        let m = (((hi - lo) / resolution).ceil() as usize).max(64);
        let start = if xs.len() == 1 { 0 } else { 1 };
        for i in start..=m {
            xs.push(lo + (hi - lo) * i as f64 / m as f64);
        }
    }
    let pts: Vec<[f64; 2]> = xs.iter().map(|&x| [x, curve_y(x, alpha)]).collect();
    let n = pts.len();
    let mut edges = Vec::with_capacity(n - 1);
    let mut arc = vec![0.0; n];
    let mut measure = vec![0.0; n];
    for i in 0..n - 1 {
        let len =
            ((pts[i + 1][0] - pts[i][0]).powi(2) + (pts[i + 1][1] - pts[i][1]).powi(2)).sqrt();
        edges.push(Edge {
            a: i,
            b: i + 1,
            length: len,
        });
        arc[i + 1] = arc[i] + len;
        measure[i] += 0.5 * len;
        measure[i + 1] += 0.5 * len;
    }
    let coords: Vec<f64> = pts.iter().flat_map(|p| [p[0], p[1]]).collect();
    let space = Space::from_parts(
        measure,
        edges,
        Some((2, coords)),
        EnergyModel::EdgeBased,
        None,
    )?;
    let length = arc[n - 1];

    let mut graph = CurveGraph {
        space,
        alpha,
        resolution,
        length,
        arc,
        balls: Vec::new(),
    };
    // keep to scales with at least 64 samples per block
    let k_hi = ((1.0 / resolution).log2().floor() as u32)
        .saturating_sub(6)
        .max(1);
    for k in 1..=k_hi {
        let r = 1.5 * 2f64.powi(-(k as i32) - 1);
        graph.balls.push(graph.ball_check(k, r)?);
    }
    Ok(graph)
}

impl CurveGraph {
    /// Connectivity of `B((2^-k, 0), r)` and of its `2^(k(1-a)-1)`-dilation.
    pub fn ball_check(&self, k: u32, radius: f64) -> Result<BallCheck> {
        let z = [2f64.powi(-(k as i32)), 0.0];
        let ball = self.space.ball(&z, radius)?;
        let (components, _) = self.space.components(&ball);
        let dilation = 2f64.powf(k as f64 * (1.0 - self.alpha) - 1.0);
        let big: VertexSet = self.space.ball(&z, dilation * radius)?;
        let (_, labels) = self.space.components(&big);
        let mut ids = ball.iter().map(|v| labels[v]);
        let first = ids.next();
        let within = first.is_some_and(|f| ids.all(|l| l == f));
        Ok(BallCheck {
            k,
            radius,
            components,
            disconnected: components > 1,
            dilation,
            within_one_dilated_component: within,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_near_dyadic_zero_is_disconnected() {
        let g = build_curve_graph(0.5, 2f64.powi(-14)).unwrap();
        let c = g.ball_check(3, 1.5 * 2f64.powi(-4)).unwrap();
        assert!(c.disconnected, "{c:?}");
        assert!(g.balls.iter().all(|b| b.disconnected));
    }

    #[test]
    fn length_stable_under_refinement() {
        let a = build_curve_graph(0.5, 2f64.powi(-14)).unwrap().length;
        let b = build_curve_graph(0.5, 2f64.powi(-15)).unwrap().length;
        assert!(a.is_finite() && a > 1.0);
        assert!(((b - a) / b).abs() < 0.01, "{a} {b}");
    }

    #[test]
    fn arc_length_function_has_energy_equal_to_length() {
        let g = build_curve_graph(0.5, 2f64.powi(-10)).unwrap();
        for p in [1.2, 2.0, 3.5] {
            let e = g.space.energy(&g.arc, &g.space.full_set(), p).unwrap();
            assert!(
                (e - g.length).abs() < 1e-9 * g.length,
                "p={p} e={e} L={}",
                g.length
            );
        }
    }

    #[test]
    fn exponent_outside_unit_interval_rejected() {
        assert!(build_curve_graph(1.0, 0.01).is_err());
        assert!(build_curve_graph(0.0, 0.01).is_err());
    }
}
