//! Swiss-cheese sets: the unit cube minus lattice balls `B(q, r_k)`,
//! `q in Q_k = ((0,1) n 2^-k N)^n`, with generation-dependent radii.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `p < n`, `r_k = delta 2^(-k alpha)`.
    Subcritical,
    /// `p = n`, `r_k = delta 2^(-2^(k alpha))`.
    Critical,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwissCheeseSpec {
    pub n: usize,
    pub p: f64,
    pub delta: f64,
    pub alpha: f64,
    pub theta: f64,
    /// Deepest lattice generation removed.
    pub k_max: u32,
    pub regime: Regime,
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let nf = n as f64;
    std::f64::consts::PI.powf(nf / 2.0) / gamma_half_plus_one(n)
}

/// `Gamma(n/2 + 1)` for integer `n`.
fn gamma_half_plus_one(n: usize) -> f64 {
    if n % 2 == 0 {
        (1..=n / 2).map(|k| k as f64).product()
    } else {
        // Gamma(m + 1/2) = (2m)! / (4^m m!) sqrt(pi) with m = (n+1)/2
        let m = (n + 1) / 2;
        let mut g = std::f64::consts::PI.sqrt();
        for k in 0..m {
            g *= k as f64 + 0.5;
        }
        g
    }
}

impl SwissCheeseSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.n as f64;
        if self.n < 2 {
            return Err(Error::Constraint(format!(
                "dimension n >= 2 required, got {}",
                self.n
            )));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::Constraint(format!(
                "0 < δ < 1/2 required, got δ = {}",
                self.delta
            )));
        }
        if self.k_max == 0 {
            return Err(Error::Constraint("K_max >= 1 required".into()));
        }
        match self.regime {
            Regime::Subcritical => {
                if !(self.p > 1.0 && self.p < n) {
                    return Err(Error::Constraint(format!(
                        "1 < p < n required, got p = {}, n = {}",
                        self.p, self.n
                    )));
                }
                let lo = n / (n - self.p);
                if !(self.alpha > lo) {
                    return Err(Error::Constraint(format!(
                        "α > n/(n−p) = {lo} required, got α = {}",
                        self.alpha
                    )));
                }
                let hi = 1.0 - 1.0 / self.alpha;
                if !(self.theta > 0.0 && self.theta < hi) {
                    return Err(Error::Constraint(format!(
                        "0 < θ < 1 − 1/α = {hi} required, got θ = {}",
                        self.theta
                    )));
                }
            }
            Regime::Critical => {
                if self.p != n {
                    return Err(Error::Constraint(format!(
                        "p = n required, got p = {}, n = {}",
                        self.p, self.n
                    )));
                }
                let lo = n / (n - 1.0);
                if !(self.alpha > lo) {
                    return Err(Error::Constraint(format!(
                        "α > n/(n−1) = {lo} required, got α = {}",
                        self.alpha
                    )));
                }
                if !(self.theta > 0.0 && self.theta < 1.0) {
                    return Err(Error::Constraint(format!(
                        "0 < θ < 1 required, got θ = {}",
                        self.theta
                    )));
                }
            }
        }
        // balls of different generations must not meet: r_k + r_l < 2^-l for k < l
        for l in 2..=self.k_max.min(60) {
            if self.radius(1) + self.radius(l) >= 2f64.powi(-(l as i32)) {
                return Err(Error::Constraint(format!(
                    "lattice balls of generations 1 and {l} overlap; decrease δ"
                )));
            }
        }
        Ok(())
    }

    /// `log2 r_k`, finite even where `r_k` underflows.
    pub fn log2_radius(&self, k: u32) -> f64 {
        match self.regime {
            Regime::Subcritical => self.delta.log2() - k as f64 * self.alpha,
            Regime::Critical => self.delta.log2() - (k as f64 * self.alpha).exp2(),
        }
    }

    pub fn radius(&self, k: u32) -> f64 {
        self.log2_radius(k).exp2()
    }

    /// Thinness majorant exponent: `sum_j 2^(-j beta)`.
    pub fn majorant_exponent(&self) -> f64 {
        let n = self.n as f64;
        match self.regime {
            Regime::Subcritical => {
                (self.alpha * (1.0 - self.theta) - 1.0) * (n - self.p) / (self.p - 1.0)
            }
            Regime::Critical => self.alpha * (1.0 - self.theta),
        }
    }

    /// Index of the coarsest generation whose ball around `x` contains `x`,
    /// checking generations `1..=k_check`.
    pub fn hole_at(&self, x: &[f64], k_check: u32) -> Option<u32> {
        (1..=k_check).find(|&k| {
            let (d2, _) = nearest_center(x, k);
            d2 == 0.0 || d2.sqrt() < self.radius(k)
        })
    }

    /// Membership in `E`: inside the closed cube and outside every removed
    /// ball of generations `1..=k_max`.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|&c| (0.0..=1.0).contains(&c)) && self.hole_at(x, self.k_max).is_none()
    }

    /// Membership bitmap of `E` on a space with coordinates.
    pub fn membership(&self, space: &crate::space::Space) -> crate::space::VertexSet {
        crate::space::VertexSet::from_predicate(space.n_vertices(), |v| {
            space.point(v).is_some_and(|x| self.contains(x))
        })
    }

    /// Membership in `E_eps`: distance at least `eps a_k^(1+theta)` from every
    /// removed ball, generations `1..=k_check`.
    pub fn in_e_eps(&self, x: &[f64], eps: f64, k_check: u32) -> bool {
        x.iter().all(|&c| (0.0..=1.0).contains(&c))
            && (1..=k_check).all(|k| {
                let (d2, _) = nearest_center(x, k);
                let a = 2f64.powi(-(k as i32));
                d2.sqrt() >= self.radius(k) + eps * a.powf(1.0 + self.theta)
            })
    }
}

/// Squared distance to the nearest point of `Q_k` and that point.
pub fn nearest_center(x: &[f64], k: u32) -> (f64, Vec<f64>) {
    let scale = 2f64.powi(k as i32);
    let top = scale - 1.0;
    let q: Vec<f64> = x
        .iter()
        .map(|&c| (c * scale).round().clamp(1.0, top) / scale)
        .collect();
    let d2 = x.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
    (d2, q)
}

#[derive(Clone, Debug)]
pub struct CapacitySumRow {
    pub j: u32,
    /// `sum_{(1-theta)j < k < j}` of the per-ball capacity majorant.
    pub sum: f64,
    /// The closed-form bound `C 2^(-j alpha (1-theta) m)` with
    /// `C = 1/(1 - 2^(-alpha m))`, `m = n-p` (resp. `n-1`), times `delta^(n-p)`.
    pub bound: f64,
}

#[derive(Clone, Debug)]
pub struct SwissCheeseReport {
    pub spec: SwissCheeseSpec,
    /// `omega_n (2^k - 1)^n r_k^n`, `k = 1..=k_max`.
    pub measure_terms: Vec<f64>,
    /// `omega_n sum_{k>=1} (2^k-1)^n r_k^n`, the whole series with its
    /// geometric tail; bounds the Lebesgue measure of the complement.
    pub measure_bound: f64,
    /// Exact Lebesgue measure of the union of the removed balls of
    /// generations `1..=k_max` (the balls are disjoint or nested).
    pub union_measure: f64,
    /// Grid spacing used for the lattice count.
    pub h: f64,
    /// Generations resolved on the grid.
    pub grid_generations: u32,
    /// Grid measure of the complement of `E` in the cube, `count * h^n`.
    pub grid_complement_measure: f64,
    pub grid_complement_vertices: u64,
    /// Present when `k_max` had to be truncated on the grid.
    pub disclosure: Option<String>,
    pub capacity_sums: Vec<CapacitySumRow>,
    /// `beta` in `sum_j 2^(-j beta)`.
    pub majorant_exponent: f64,
    /// `q = 2^(-beta)`.
    pub majorant_ratio: f64,
    /// Partial sums `S_J = sum_{j=1..J} q^j`, `J = 1..=len`.
    pub majorant_partial: Vec<f64>,
    /// Closed-form tails `sum_{j>J} q^j = q^(J+1)/(1-q)`.
    pub majorant_tail: Vec<f64>,
    /// `q/(1-q)`.
    pub majorant_total: f64,
}

/// Number of grid points `i h`, `0 <= i <= last`, per axis, strictly inside
/// the ball `B(center, sqrt(r2))`.
fn count_ball(center: &[f64], r2: f64, h: f64, last: i64) -> u64 {
    if r2 <= 0.0 {
        return 0;
    }
    let c = center[0];
    let r = r2.sqrt();
    if center.len() == 1 {
        let lo = ((c - r) / h).floor() as i64 + 1;
        let hi = ((c + r) / h).ceil() as i64 - 1;
        let (lo, hi) = (lo.max(0), hi.min(last));
        return (hi - lo + 1).max(0) as u64;
    }
    let lo = (((c - r) / h).floor() as i64).max(0);
    let hi = (((c + r) / h).ceil() as i64).min(last);
    let mut total = 0;
    for i in lo..=hi {
        let d = i as f64 * h - c;
        let rest = r2 - d * d;
        if rest > 0.0 {
            total += count_ball(&center[1..], rest, h, last);
        }
    }
    total
}

/// Row visits needed to count generation `k`'s balls at spacing `h`.
fn work_estimate(spec: &SwissCheeseSpec, k_grid: u32, h: f64) -> f64 {
    let n = spec.n as i32;
    let mut w = 0.0;
    for k in 1..=k_grid {
        let balls = (2f64.powi(k as i32) - 1.0).powi(n)
            - if k > 1 {
                (2f64.powi(k as i32 - 1) - 1.0).powi(n)
            } else {
                0.0
            };
        w += balls * (2.0 * spec.radius(k) / h + 1.0).powi(n - 1);
    }
    w
}

const WORK_LIMIT: f64 = 2e8;

/// Builds the analytic report and counts the grid complement of `E` at
/// spacing `h` (default `r_(k_max)/4`). Generations finer than the grid can
/// carry, or whose radii underflow, are dropped from the count and the
/// truncation is disclosed.
pub fn swiss_cheese(
    spec: &SwissCheeseSpec,
    h: Option<f64>,
    j_report: u32,
) -> Result<SwissCheeseReport> {
    spec.validate()?;
    let n = spec.n;
    let nf = n as f64;
    let omega = unit_ball_volume(n);

    // (a) measure bound, summed until terms are negligible, then a geometric tail
    let term = |k: u32| -> f64 {
        let l = nf * (2f64.powi(k as i32) - 1.0).log2() + nf * spec.log2_radius(k);
        omega * l.exp2()
    };
    let measure_terms: Vec<f64> = (1..=spec.k_max).map(term).collect();
    let mut measure_bound = 0.0;
    let mut k = 1;
    loop {
        let t = term(k);
        measure_bound += t;
        // the ratio of consecutive terms is at most 2^n 2^(log2 r_(k+1) - log2 r_k) n-fold
        let ratio = (nf * (1.0 + spec.log2_radius(k + 1) - spec.log2_radius(k))).exp2();
        if ratio < 1.0 && t * ratio / (1.0 - ratio) <= f64::EPSILON * measure_bound * 1e-3
            || k > 200
        {
            measure_bound += t * ratio / (1.0 - ratio).max(f64::MIN_POSITIVE);
            break;
        }
        k += 1;
    }

    // exact union measure of generations 1..=k_max: every center counted once,
    // with the radius of its coarsest generation
    let mut union_measure = 0.0;
    for k in 1..=spec.k_max {
        let new_centers = (2f64.powi(k as i32) - 1.0).powi(n as i32)
            - if k > 1 {
                (2f64.powi(k as i32 - 1) - 1.0).powi(n as i32)
            } else {
                0.0
            };
        union_measure += new_centers * omega * (nf * spec.log2_radius(k)).exp2();
    }

    // grid count
    let mut k_grid = spec.k_max;
    let mut disclosure = None;
    let h_used;
    loop {
        let hk = h.unwrap_or_else(|| spec.radius(k_grid) / 4.0);
        let feasible =
            hk > 1e-300 && (1.0 / hk) < 9e15 && work_estimate(spec, k_grid, hk) <= WORK_LIMIT;
        if feasible {
            h_used = hk;
            break;
        }
        if k_grid == 1 {
            return Err(Error::Constraint(format!(
                "grid spacing {hk:e} cannot be counted even for generation 1"
            )));
        }
        k_grid -= 1;
    }
    if k_grid < spec.k_max {
        disclosure = Some(format!(
            "grid count truncated to generations 1..={k_grid} (h = {h_used:e}); r_{} = 2^{:.1} is below any countable grid",
            k_grid + 1,
            spec.log2_radius(k_grid + 1)
        ));
    }
    let last = (1.0 / h_used + 1e-9).floor() as i64;
    let mut count = 0u64;
    let side = 1u64 << k_grid;
    let mut idx = vec![1u64; n];
    let mut center = vec![0.0; n];
    'outer: loop {
        // coarsest generation containing this center
        let k0 = idx
            .iter()
            .map(|&i| k_grid - i.trailing_zeros())
            .max()
            .expect("n >= 2");
        for a in 0..n {
            center[a] = idx[a] as f64 / side as f64;
        }
        let r = spec.radius(k0);
        count += count_ball(&center, r * r, h_used, last);
        for a in 0..n {
            idx[a] += 1;
            if idx[a] < side {
                continue 'outer;
            }
            idx[a] = 1;
        }
        break;
    }
    let grid_complement_measure = count as f64 * h_used.powi(n as i32);

    // (b) capacity majorant sums
    let m = match spec.regime {
        Regime::Subcritical => nf - spec.p,
        Regime::Critical => nf - 1.0,
    };
    let c_geo = 1.0 / (1.0 - (-spec.alpha * m).exp2());
    let pref = match spec.regime {
        Regime::Subcritical => spec.delta.powf(nf - spec.p),
        Regime::Critical => 1.0,
    };
    let capacity_sums = (1..=j_report)
        .map(|j| {
            let k_lo = ((1.0 - spec.theta) * j as f64).floor() as u32 + 1;
            let sum: f64 = (k_lo..j)
                .map(|k| pref * (-(k as f64) * spec.alpha * m).exp2())
                .sum();
            let bound = pref * c_geo * (-(j as f64) * spec.alpha * (1.0 - spec.theta) * m).exp2();
            CapacitySumRow { j, sum, bound }
        })
        .collect();

    // (c) thinness majorant
    let beta = spec.majorant_exponent();
    let q = (-beta).exp2();
    let mut majorant_partial = Vec::with_capacity(j_report as usize);
    let mut majorant_tail = Vec::with_capacity(j_report as usize);
    let mut s = 0.0;
    for j in 1..=j_report {
        s += (-(j as f64) * beta).exp2();
        majorant_partial.push(s);
        majorant_tail.push((-((j + 1) as f64) * beta).exp2() / (1.0 - q));
    }

    Ok(SwissCheeseReport {
        spec: *spec,
        measure_terms,
        measure_bound,
        union_measure,
        h: h_used,
        grid_generations: k_grid,
        grid_complement_measure,
        grid_complement_vertices: count,
        disclosure,
        capacity_sums,
        majorant_exponent: beta,
        majorant_ratio: q,
        majorant_partial,
        majorant_tail,
        majorant_total: q / (1.0 - q),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sub() -> SwissCheeseSpec {
        SwissCheeseSpec {
            n: 2,
            p: 1.5,
            delta: 0.1,
            alpha: 5.0,
            theta: 0.1,
            k_max: 4,
            regime: Regime::Subcritical,
        }
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn constraint_messages_name_the_violated_inequality() {
        let mut s = sub();
        s.alpha = 3.0;
        let msg = s.validate().unwrap_err().to_string();
        assert!(msg.contains("α > n/(n−p)"), "{msg}");
        let mut s = sub();
        s.theta = 0.9;
        assert!(s.validate().is_err());
    }

    #[test]
    fn lattice_count_matches_disc_area() {
        let c = count_ball(&[0.5003, 0.4999], 0.1f64.powi(2), 1e-3, 1000);
        let area = std::f64::consts::PI * 0.01;
        assert!(((c as f64) * 1e-6 - area).abs() < 2e-3 * area);
    }

    #[test]
    fn membership_respects_holes() {
        let s = sub();
        assert!(!s.contains(&[0.5, 0.5]));
        assert!(!s.contains(&[0.5 + 0.5 * s.radius(1), 0.5]));
        assert!(s.contains(&[0.5 + s.radius(1), 0.5]));
        assert!(s.contains(&[1.0 / 3.0, 0.3]));
        assert!(!s.contains(&[1.1, 0.3]));
    }

    #[test]
    fn subcritical_report_is_consistent() {
        let r = swiss_cheese(&sub(), None, 30).unwrap();
        assert_eq!(r.grid_generations, 4);
        assert!(r.disclosure.is_none());
        assert!(r.grid_complement_measure <= r.measure_bound);
        assert!((r.grid_complement_measure - r.union_measure).abs() < 0.01 * r.union_measure);
        assert!((r.majorant_exponent - 3.5).abs() < 1e-15);
        assert!(r.capacity_sums.iter().all(|c| c.sum <= c.bound));
    }

    #[test]
    fn critical_regime_is_truncated_with_disclosure() {
        let s = SwissCheeseSpec {
            n: 2,
            p: 2.0,
            delta: 0.1,
            alpha: 3.0,
            theta: 0.3,
            k_max: 4,
            regime: Regime::Critical,
        };
        let r = swiss_cheese(&s, None, 20).unwrap();
        assert!(r.grid_generations < 4);
        assert!(r.disclosure.is_some());
        assert!((r.majorant_exponent - 2.1).abs() < 1e-15);
        assert!(r.grid_complement_measure <= r.measure_bound);
    }
}
