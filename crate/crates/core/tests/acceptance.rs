//! Acceptance criteria, one line each. Reference values are recomputed
//! here from closed forms; the battery's own verdict must agree.

use std::f64::consts::PI;
use std::process::ExitCode;

use finepot::battery::{self, BatteryOptions, CriterionReport};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

struct Verdict {
    ok: bool,
    notes: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self {
            ok: true,
            notes: Vec::new(),
        }
    }

    fn check(&mut self, cond: bool, note: impl Into<String>) {
        if !cond {
            self.ok = false;
            self.notes.push(note.into());
        }
    }
}

fn get(r: &CriterionReport, name: &str) -> f64 {
    r.value(name)
        .unwrap_or_else(|| panic!("criterion {} has no measurement {name}", r.id))
}

/// `sum_{j=1..J} 2^(-j num/den)` for `J = 1..=count` in fixed point with
/// `bits` fractional bits; each term is `floor(root_den(2^(bits den - j num)))`.
fn dyadic_partial_sums(num: u32, den: u32, count: u32, bits: u32) -> Vec<f64> {
    let mut sum = BigUint::from(0u32);
    let mut out = Vec::new();
    for j in 1..=count {
        let e = bits * den - j * num;
        let term = (BigUint::one() << e).nth_root(den);
        sum += term;
        // keep 64 significant bits for the conversion
        let shift = bits - 64;
        let top = (&sum >> shift).to_f64().expect("fits");
        out.push(top * (-64f64).exp2());
    }
    out
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn uniqueness(r: &CriterionReport, v: &mut Verdict) {
    v.check(get(r, "instances") >= 50.0, "fewer than 50 problems");
    v.check(
        get(r, "largest_graph") <= 2000.0,
        "graph above 2000 vertices",
    );
    v.check(get(r, "worst_relative_spread") < 1e-6, "spread above 1e-6");
}

fn comparison(r: &CriterionReport, v: &mut Verdict) {
    v.check(get(r, "pairs") >= 100.0, "fewer than 100 pairs");
    v.check(get(r, "max_violation") <= 1e-8, "u > u' + 1e-8 somewhere");
}

fn mazya(r: &CriterionReport, v: &mut Verdict) {
    let oracle = 4.0 * 2f64.ln();
    v.check((oracle - 2.772589).abs() < 1e-6, "4 ln 2 literal");
    v.check(
        (get(r, "constant_p2") - oracle).abs() < 1e-12,
        "constant at p = 2 is not 4 ln 2",
    );
    v.check(get(r, "functions") >= 200.0, "fewer than 200 functions");
    v.check(
        get(r, "failures") == 0.0 && get(r, "worst_lhs_over_rhs") <= 1.0 + 1e-9,
        "inequality violated",
    );
}

fn capacity_properties(r: &CriterionReport, v: &mut Verdict) {
    v.check(get(r, "instances") >= 100.0, "fewer than 100 instances");
    v.check(get(r, "failures") == 0.0, "property violated beyond 1e-8");
    v.check(
        get(r, "worst_subadditivity_ratio") <= 1.0 + 1e-8,
        "subadditivity ratio above 1",
    );
}

fn annulus(r: &CriterionReport, v: &mut Verdict) {
    // radial solution log(2r/|x|)/log 2: energy 2 pi / ln 2 for every r
    let oracle = 2.0 * PI / 2f64.ln();
    v.check((oracle - 9.0647).abs() < 1e-4, "oracle literal");
    let errs: Vec<f64> = [16, 32, 64, 128]
        .iter()
        .filter_map(|m| r.value(&format!("cap_m{m}")))
        .map(|c| rel(c, oracle))
        .collect();
    v.check(
        rel(get(r, "cap_m64"), oracle) <= 0.03,
        "h = r/64 error above 3%",
    );
    v.check(
        errs.windows(2).all(|w| w[1] < w[0]),
        "error does not decrease under refinement",
    );
}

fn scaling(r: &CriterionReport, v: &mut Verdict) {
    for (n, p) in [(2.0, 1.5), (3.0, 2.0)] {
        let s = get(r, &format!("log2_ratio_n{n}_p{p}"));
        let target = n - p;
        v.check(
            (s - target).abs() <= 0.1 * target,
            format!("(n, p) = ({n}, {p}) slope {s}"),
        );
    }
}

fn p_one(r: &CriterionReport, v: &mut Verdict) {
    for j in [1u32, 4, 16, 64] {
        // int_0^(1/j) (1 + x) j dx
        let exact = 1.0 + 1.0 / (2.0 * j as f64);
        v.check(
            rel(get(r, &format!("energy_j{j}")), exact) <= 0.01,
            format!("j = {j}"),
        );
    }
}

fn swiss(r: &CriterionReport, v: &mut Verdict) {
    // (a) measure bound pi sum (2^k - 1)^2 r_k^2, summed directly
    let sub_r = |k: i32| 0.1 * 2f64.powi(-5 * k);
    let crit_r = |k: i32| 0.1 * (-(2f64.powi(3 * k))).exp2();
    for (tag, radius) in [("sub", &sub_r as &dyn Fn(i32) -> f64), ("crit", &crit_r)] {
        let bound: f64 = (1..=60)
            .map(|k| PI * (2f64.powi(k) - 1.0).powi(2) * radius(k).powi(2))
            .sum();
        v.check(
            rel(get(r, &format!("{tag}_measure_bound")), bound) < 1e-12,
            format!("{tag} bound differs from direct sum"),
        );
        v.check(
            get(r, &format!("{tag}_grid_measure")) <= bound,
            format!("{tag} grid measure above bound"),
        );
    }
    // (b) exponents as exact fractions: (a(1-t) - 1)(n - p)/(p - 1) = 7/2 at
    // (a, t, n, p) = (5, 1/10, 2, 3/2); a(1-t) = 21/10 at (3, 3/10)
    for (tag, num, den) in [("sub", 7u32, 2u32), ("crit", 21, 10)] {
        let beta = num as f64 / den as f64;
        v.check(
            (get(r, &format!("{tag}_beta")) - beta).abs() < 1e-12,
            format!("{tag} exponent"),
        );
        let sums = r.series(&format!("{tag}_partial_"));
        let exact = dyadic_partial_sums(num, den, sums.len() as u32, 256);
        let worst = sums
            .iter()
            .zip(&exact)
            .map(|(a, b)| rel(*a, *b))
            .fold(0.0, f64::max);
        v.check(
            worst <= 1e-12,
            format!("{tag} partial sums off by {worst:e}"),
        );
        // the fixed-point sums themselves against q (1 - q^J) / (1 - q)
        let q = (-beta).exp2();
        let closed = exact
            .iter()
            .enumerate()
            .all(|(k, s)| rel(*s, q * (1.0 - q.powi(k as i32 + 1)) / (1.0 - q)) < 1e-13);
        v.check(
            closed,
            format!("{tag} fixed-point oracle disagrees with the geometric sum"),
        );
    }
    // (c)
    v.check(
        get(r, "witness_found") == 1.0 && get(r, "witness_ratio") < 1.0,
        "no witness",
    );
}

fn transmission(r: &CriterionReport, v: &mut Verdict) {
    for name in ["const4", "var"] {
        let ratio =
            get(r, &format!("{name}_residual_h32")) / get(r, &format!("{name}_residual_h64"));
        v.check(ratio >= 1.8, format!("{name} ratio {ratio}"));
    }
    v.check(
        get(r, "linear_residual") <= 1e-10,
        "linear fixture residual",
    );
}

fn oned(r: &CriterionReport, v: &mut Verdict) {
    v.check(get(r, "instances") >= 500.0, "fewer than 500 instances");
    v.check(
        get(r, "failures") == 0.0 && get(r, "min_rhs_over_lhs") >= 1.0,
        "bound violated",
    );
    v.check(
        get(r, "atom_bitwise_identical") >= 1.0,
        "no atom configuration tested",
    );
    let bitwise = r
        .measured
        .iter()
        .find(|m| m.name == "atom_bitwise_identical")
        .expect("present");
    v.check(
        Some(bitwise.value) == bitwise.reference,
        "atoms changed a Dirichlet solution",
    );
}

fn eigen(r: &CriterionReport, v: &mut Verdict) {
    // first Dirichlet eigenvalue of -u'' on (0, 1) is pi^2
    let oracle = 1.0 / (PI * PI);
    v.check(
        rel(get(r, "poincare_constant"), oracle) <= 0.02,
        "constant off by more than 2%",
    );
}

fn restriction(r: &CriterionReport, v: &mut Verdict) {
    v.check(get(r, "pairs") >= 100.0, "fewer than 100 pairs");
    v.check(
        get(r, "gradient_failures") == 0.0,
        "restricted gradient differs",
    );
    v.check(get(r, "energy_failures") == 0.0, "energy not monotone");
    // path 0-1-2, u = (0, 1, 2), unit masses split by degree: 1.5 per edge
    v.check(
        get(r, "fixture_full_energy") == 3.0,
        "fixture energy over E",
    );
    v.check(
        get(r, "fixture_restricted_energy") == 0.0,
        "disconnected fixture energy",
    );
}

type Oracle = fn(&CriterionReport, &mut Verdict);

fn main() -> ExitCode {
    let opts = BatteryOptions::default();
    let oracles: [Oracle; 12] = [
        uniqueness,
        comparison,
        mazya,
        capacity_properties,
        annulus,
        scaling,
        p_one,
        swiss,
        transmission,
        oned,
        eigen,
        restriction,
    ];
    let mut failed = 0;
    for (k, oracle) in oracles.iter().enumerate() {
        let id = k as u8 + 1;
        let line = match battery::run(&opts, &[id]) {
            Ok(mut reports) => {
                let r = reports.pop().expect("one report");
                let mut v = Verdict::new();
                oracle(&r, &mut v);
                v.check(r.passed, "battery verdict");
                v.check(r.within_budget(), "over the time budget");
                if !v.ok {
                    failed += 1;
                }
                let extra = if v.notes.is_empty() {
                    String::new()
                } else {
                    format!(" -- {}", v.notes.join("; "))
                };
                format!(
                    "criterion {id:>2} {}: {} [{:.2?}] {}{extra}",
                    if v.ok { "PASS" } else { "FAIL" },
                    r.title,
                    r.elapsed,
                    r.detail
                )
            }
            Err(e) => {
                failed += 1;
                format!("criterion {id:>2} FAIL: error {e}")
            }
        };
        println!("{line}");
    }
    println!("acceptance: {}/12 criteria passed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
