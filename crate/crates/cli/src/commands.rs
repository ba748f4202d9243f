use std::path::Path;
use std::sync::Arc;

use finepot::battery::{self, BatteryOptions};
use finepot::capacity::{
    adams_check, condenser_capacity, mazya_check, sobolev_capacity, variational_capacity,
    CapacityResult,
};
use finepot::finetop::{
    fine_interior, fine_interior_swiss, swiss_cheese, wiener_sum, FineClassification, FineOptions,
};
use finepot::io::{fmt_f64, read_problem_table, SpaceSpec, Table};
use finepot::line2d::{jump_residual, transmission_solve, LineMeasureSpace};
use finepot::oned::{
    dirichlet_atom_invariance, p_to_one_demo, poincare_battery, poincare_bound_1d, Measure1D,
};
use finepot::solver::{p_laplacian_residual, solve as solve_problem, ObstacleProblem};
use finepot::space::{ObstacleField, ScalarField, Space};
use finepot::{Error, Result};
use serde::Deserialize;

use crate::config::{need, CapacityKindSpec, ConfigFile, ProblemSpec};
use crate::output::{Run, Summary};

pub struct Context<'a> {
    pub cfg: &'a ConfigFile,
    /// Directory that relative input paths are resolved against.
    pub base: &'a Path,
    pub quick: bool,
    /// Number of resolutions in a refinement study.
    pub refine: Option<u32>,
}

impl Context<'_> {
    fn levels(&self) -> Result<u32> {
        match self.refine {
            None => Ok(1),
            Some(k) if k >= 2 => Ok(k),
            Some(k) => Err(Error::Config(format!(
                "--refine needs at least 2 resolutions, got {k}"
            ))),
        }
    }
}

fn halve(spec: &SpaceSpec, k: u32) -> Result<SpaceSpec> {
    match spec {
        SpaceSpec::Grid {
            bounds,
            h,
            weight,
            model,
        } => Ok(SpaceSpec::Grid {
            bounds: bounds.clone(),
            h: h * (-(k as f64)).exp2(),
            weight: weight.clone(),
            model: *model,
        }),
        SpaceSpec::Graph { .. } => {
            Err(Error::Config("refinement studies need a grid space".into()))
        }
    }
}

fn coords_header(space: &Space) -> Vec<String> {
    (0..space.dim()).map(|a| format!("x{a}")).collect()
}

fn coords(space: &Space, v: usize) -> Vec<String> {
    space
        .point(v)
        .map(|x| x.iter().map(|&c| fmt_f64(c)).collect())
        .unwrap_or_default()
}

/// `level,h,value,difference,observed_order`; the order needs three levels.
fn refinement_table(hs: &[f64], values: &[f64]) -> Table {
    let mut t = Table::new(["level", "h", "value", "difference", "observed_order"]);
    for k in 0..values.len() {
        let diff = if k >= 1 {
            values[k] - values[k - 1]
        } else {
            f64::NAN
        };
        let order = if k >= 2 {
            ((values[k - 1] - values[k - 2]) / diff).abs().log2()
        } else {
            f64::NAN
        };
        t.push(vec![
            k.to_string(),
            fmt_f64(hs[k]),
            fmt_f64(values[k]),
            fmt_f64(diff),
            fmt_f64(order),
        ]);
    }
    t
}

fn build_problem(
    space: Arc<Space>,
    ps: &ProblemSpec,
    ctx: &Context,
    run: &mut Run,
) -> Result<ObstacleProblem> {
    let n = space.n_vertices();
    if let Some(t) = &ps.table {
        let path = ctx.base.join(t);
        run.input(&path);
        let tab = read_problem_table(&path, n)?;
        return ObstacleProblem::new(
            space,
            tab.domain,
            ScalarField::new(tab.f)?,
            ObstacleField::new(tab.psi1)?,
            ObstacleField::new(tab.psi2)?,
            ps.p,
        );
    }
    let domain = ps.domain.build(&space)?;
    let f =
        ps.f.as_ref()
            .ok_or_else(|| Error::Config("[problem] needs `f` or `table`".into()))?
            .sample(&space)?;
    let psi1 = match &ps.psi1 {
        Some(g) => g.sample(&space)?,
        None => vec![f64::NEG_INFINITY; n],
    };
    let psi2 = match &ps.psi2 {
        Some(g) => g.sample(&space)?,
        None => vec![f64::INFINITY; n],
    };
    ObstacleProblem::new(
        space,
        domain,
        ScalarField::new(f)?,
        ObstacleField::new(psi1)?,
        ObstacleField::new(psi2)?,
        ps.p,
    )
}

pub fn solve(ctx: &Context, run: &mut Run) -> Result<()> {
    let spec = need(&ctx.cfg.space, "space")?;
    let ps = need(&ctx.cfg.problem, "problem")?;
    let config = &ctx.cfg.solver;
    for p in spec.inputs(ctx.base) {
        run.input(&p);
    }
    run.param("p", ps.p);
    let levels = ctx.levels()?;
    let mut hs = Vec::new();
    let mut energies = Vec::new();
    for k in 0..levels {
        let s = if k == 0 {
            spec.clone()
        } else {
            halve(spec, k)?
        };
        let space = Arc::new(s.build(ctx.base)?);
        let problem = build_problem(space.clone(), ps, ctx, run)?;
        let sol = solve_problem(&problem, config)?;
        hs.push(space.grid().map_or(f64::NAN, |g| g.h));
        energies.push(sol.energy_value);
        if k > 0 {
            continue;
        }
        let (g, _) = p_laplacian_residual(&problem, sol.u.values());
        let mut header = vec!["id".to_string()];
        header.extend(coords_header(&space));
        header.extend(["in_e", "u", "kkt"].map(String::from));
        let mut t = Table::new(header);
        for v in 0..space.n_vertices() {
            let inside = problem.domain.contains(v);
            let u = sol.u[v];
            let kkt = if inside {
                (u - (u - g[v]).max(problem.psi1[v]).min(problem.psi2[v])).abs()
            } else {
                0.0
            };
            let mut row = vec![v.to_string()];
            row.extend(coords(&space, v));
            row.extend([u8::from(inside).to_string(), fmt_f64(u), fmt_f64(kkt)]);
            t.push(row);
        }
        run.table("solution.csv", &t)?;
        let mut tel = Table::new(["iteration", "energy", "kkt"]);
        for (i, (e, r)) in sol.history.iter().enumerate() {
            tel.push(vec![i.to_string(), fmt_f64(*e), fmt_f64(*r)]);
        }
        run.table("telemetry.csv", &tel)?;
        let mut s = Summary::new();
        s.add(
            "energy",
            sol.energy_value,
            config.tol_energy * sol.energy_value.abs(),
        );
        s.add("iterations", sol.iterations as f64, 0.0);
        s.add("kkt_residual", sol.kkt_residual, config.tol_kkt);
        s.add(
            "feasibility_violation",
            sol.feasibility_violation,
            config.tol_feasibility,
        );
        s.add("regularization", sol.regularization, 0.0);
        s.flag("free_problem", sol.free_problem);
        run.table("summary.csv", &s.0)?;
        println!(
            "energy {} after {} iterations (kkt {:.2e})",
            fmt_f64(sol.energy_value),
            sol.iterations,
            sol.kkt_residual
        );
    }
    if levels > 1 {
        run.table("refinement.csv", &refinement_table(&hs, &energies))?;
    }
    Ok(())
}

pub fn capacity(ctx: &Context, run: &mut Run) -> Result<()> {
    let spec = need(&ctx.cfg.space, "space")?;
    let cs = need(&ctx.cfg.capacity, "capacity")?;
    for p in spec.inputs(ctx.base) {
        run.input(&p);
    }
    run.param("p", cs.p);
    let levels = ctx.levels()?;
    let mut t = Table::new([
        "level",
        "kind",
        "h",
        "value",
        "kkt_residual",
        "regularization",
        "iterations",
    ]);
    let (mut hs, mut values) = (Vec::new(), Vec::new());
    for k in 0..levels {
        let s = if k == 0 {
            spec.clone()
        } else {
            halve(spec, k)?
        };
        let space = s.build(ctx.base)?;
        let a = cs.a.build(&space)?;
        let c: CapacityResult = match cs.kind {
            CapacityKindSpec::Sobolev => sobolev_capacity(&space, &a, cs.p, &ctx.cfg.solver)?,
            CapacityKindSpec::Variational => {
                variational_capacity(&space, &a, &cs.e.build(&space)?, cs.p, &ctx.cfg.solver)?
            }
            CapacityKindSpec::Condenser => {
                let a0 = cs
                    .a0
                    .as_ref()
                    .ok_or_else(|| Error::Config("a condenser needs `a0`".into()))?
                    .build(&space)?;
                condenser_capacity(
                    &space,
                    &a0,
                    &a,
                    &cs.omega.build(&space)?,
                    cs.p,
                    &ctx.cfg.solver,
                )?
            }
        };
        let h = c.h.unwrap_or(f64::NAN);
        t.push(vec![
            k.to_string(),
            c.kind.as_str().to_string(),
            fmt_f64(h),
            fmt_f64(c.value),
            fmt_f64(c.kkt_residual),
            fmt_f64(c.regularization),
            c.iterations.to_string(),
        ]);
        println!(
            "level {k}: {} capacity {}",
            c.kind.as_str(),
            fmt_f64(c.value)
        );
        hs.push(h);
        values.push(c.value);
    }
    run.table("capacity.csv", &t)?;
    if levels > 1 {
        run.table("refinement.csv", &refinement_table(&hs, &values))?;
    }
    Ok(())
}

pub fn adams(ctx: &Context, run: &mut Run) -> Result<()> {
    let spec = need(&ctx.cfg.space, "space")?;
    let ps = need(&ctx.cfg.problem, "problem")?;
    for p in spec.inputs(ctx.base) {
        run.input(&p);
    }
    let space = Arc::new(spec.build(ctx.base)?);
    let problem = build_problem(space, ps, ctx, run)?;
    let rep = adams_check(&problem, &ctx.cfg.solver)?;
    let mut s = Summary::new();
    s.add(
        "choquet_integral",
        rep.integral.value,
        1e-9 * rep.integral.value,
    );
    s.add("levels", rep.integral.levels.len() as f64, 0.0);
    s.add("gap_energy", rep.gap_energy, 1e-9 * rep.gap_energy);
    s.add("lower_bound", rep.bound, 1e-9 * rep.bound);
    s.flag("passed", rep.passed);
    run.table("adams.csv", &s.0)?;
    println!(
        "energy(u - f) = {} >= {} : {}",
        fmt_f64(rep.gap_energy),
        fmt_f64(rep.bound),
        rep.passed
    );
    Ok(())
}

pub fn mazya(ctx: &Context, run: &mut Run) -> Result<()> {
    let spec = need(&ctx.cfg.space, "space")?;
    let ms = need(&ctx.cfg.mazya, "mazya")?;
    for p in spec.inputs(ctx.base) {
        run.input(&p);
    }
    let space = spec.build(ctx.base)?;
    let e = ms.e.build(&space)?;
    let mut u = ms.u.sample(&space)?;
    for (v, x) in u.iter_mut().enumerate() {
        if !e.contains(v) {
            *x = 0.0;
        }
    }
    let rep = mazya_check(&space, &ScalarField::new(u)?, &e, ms.p, &ctx.cfg.solver)?;
    let mut s = Summary::new();
    s.add("choquet_level_integral", rep.lhs, 1e-9 * rep.lhs);
    s.add("energy", rep.energy, 1e-9 * rep.energy);
    s.add("constant", rep.constant, 0.0);
    s.add("rhs", rep.rhs, 1e-9 * rep.rhs);
    s.add("levels", rep.levels as f64, 0.0);
    s.flag("passed", rep.passed);
    run.table("mazya.csv", &s.0)?;
    let mut t = Table::new(["a", "lhs", "constant", "rhs", "passed", "tolerance"]);
    for l in &rep.lemma {
        t.push(vec![
            fmt_f64(l.a),
            fmt_f64(l.lhs),
            fmt_f64(l.constant),
            fmt_f64(l.rhs),
            u8::from(l.passed).to_string(),
            fmt_f64(1e-9),
        ]);
    }
    run.table("mazya_two_level.csv", &t)?;
    println!(
        "{} <= {} : {}",
        fmt_f64(rep.lhs),
        fmt_f64(rep.rhs),
        rep.passed
    );
    Ok(())
}

pub fn wiener(ctx: &Context, run: &mut Run) -> Result<()> {
    let spec = need(&ctx.cfg.space, "space")?;
    let ws = need(&ctx.cfg.wiener, "wiener")?;
    for p in spec.inputs(ctx.base) {
        run.input(&p);
    }
    let space = spec.build(ctx.base)?;
    let e = ws.e.build(&space)?;
    let mut terms = Table::new([
        "point",
        "vertex",
        "j",
        "radius",
        "numerator",
        "denominator",
        "ratio",
        "term",
        "solver_tol",
    ]);
    let mut sums = Table::new([
        "point",
        "vertex",
        "partial_sum",
        "tail_bound",
        "max_ratio",
        "solver_tol",
    ]);
    for (i, x) in ws.points.iter().enumerate() {
        let v = space
            .nearest_vertex(x)
            .ok_or_else(|| Error::Config("wiener needs vertex coordinates".into()))?;
        let w = wiener_sum(&space, v, &e, ws.j_min..=ws.j_max, ws.p, &ctx.cfg.solver)?;
        for t in &w.terms {
            terms.push(vec![
                i.to_string(),
                v.to_string(),
                t.j.to_string(),
                fmt_f64(t.radius),
                fmt_f64(t.numerator),
                fmt_f64(t.denominator),
                fmt_f64(t.ratio),
                fmt_f64(t.term),
                fmt_f64(ctx.cfg.solver.tol_kkt),
            ]);
        }
        let tail = w.tail_bound.unwrap_or(f64::NAN);
        sums.push(vec![
            i.to_string(),
            v.to_string(),
            fmt_f64(w.partial_sum),
            fmt_f64(tail),
            fmt_f64(w.max_ratio()),
            fmt_f64(ctx.cfg.solver.tol_kkt),
        ]);
        println!(
            "point {i}: partial sum {} tail {}",
            fmt_f64(w.partial_sum),
            fmt_f64(tail)
        );
    }
    run.table("wiener_terms.csv", &terms)?;
    run.table("wiener.csv", &sums)?;
    Ok(())
}

pub fn swisscheese(ctx: &Context, run: &mut Run) -> Result<()> {
    let spec = need(&ctx.cfg.swiss, "swiss")?;
    let (h, j_report) = ctx
        .cfg
        .swiss_report
        .as_ref()
        .map_or((None, 20), |r| (r.h, r.j_report));
    let rep = swiss_cheese(spec, h, j_report)?;
    run.param("regime", format!("{:?}", spec.regime));
    if let Some(d) = &rep.disclosure {
        run.param("disclosure", d);
        println!("note: {d}");
    }
    let mut s = Summary::new();
    s.add(
        "measure_bound",
        rep.measure_bound,
        f64::EPSILON * rep.measure_bound,
    );
    s.add(
        "union_measure",
        rep.union_measure,
        f64::EPSILON * rep.union_measure,
    );
    s.add(
        "grid_complement_measure",
        rep.grid_complement_measure,
        (rep.grid_complement_measure - rep.union_measure).abs(),
    );
    s.add("grid_h", rep.h, 0.0);
    s.add("grid_generations", rep.grid_generations as f64, 0.0);
    s.add("majorant_exponent", rep.majorant_exponent, 0.0);
    s.add("majorant_ratio", rep.majorant_ratio, 0.0);
    s.add(
        "majorant_total",
        rep.majorant_total,
        f64::EPSILON * rep.majorant_total,
    );
    s.flag(
        "grid_below_bound",
        rep.grid_complement_measure <= rep.measure_bound,
    );
    run.table("swiss_summary.csv", &s.0)?;
    let mut m = Table::new(["k", "term", "radius_log2"]);
    for (k, t) in rep.measure_terms.iter().enumerate() {
        let k = k as u32 + 1;
        m.push(vec![
            k.to_string(),
            fmt_f64(*t),
            fmt_f64(spec.log2_radius(k)),
        ]);
    }
    run.table("swiss_measure.csv", &m)?;
    let mut c = Table::new(["j", "sum", "bound"]);
    for r in &rep.capacity_sums {
        c.push(vec![r.j.to_string(), fmt_f64(r.sum), fmt_f64(r.bound)]);
    }
    run.table("swiss_capacity_sums.csv", &c)?;
    let q = rep.majorant_ratio;
    let mut g = Table::new(["j", "partial_sum", "tail", "closed_form", "abs_error"]);
    for (k, (p, t)) in rep
        .majorant_partial
        .iter()
        .zip(&rep.majorant_tail)
        .enumerate()
    {
        let closed = q * (1.0 - q.powi(k as i32 + 1)) / (1.0 - q);
        g.push(vec![
            (k + 1).to_string(),
            fmt_f64(*p),
            fmt_f64(*t),
            fmt_f64(closed),
            fmt_f64((p - closed).abs()),
        ]);
    }
    run.table("swiss_majorant.csv", &g)?;
    println!(
        "grid complement {} <= bound {}; beta {}",
        fmt_f64(rep.grid_complement_measure),
        fmt_f64(rep.measure_bound),
        fmt_f64(rep.majorant_exponent)
    );
    Ok(())
}

fn classification_table(c: &FineClassification) -> Table {
    let dim = c.points.iter().map(|p| p.center.len()).max().unwrap_or(0);
    let mut header = vec!["point".to_string()];
    header.extend((0..dim).map(|a| format!("x{a}")));
    header.extend(["label", "partial_sum", "tail_bound", "max_ratio"].map(String::from));
    let mut t = Table::new(header);
    for (i, p) in c.points.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend((0..dim).map(|a| p.center.get(a).map_or(String::new(), |&x| fmt_f64(x))));
        let (ps, tb, mr) = p
            .evidence
            .as_ref()
            .map_or((f64::NAN, f64::NAN, f64::NAN), |w| {
                (
                    w.partial_sum,
                    w.tail_bound.unwrap_or(f64::NAN),
                    w.max_ratio(),
                )
            });
        row.extend([
            p.label.as_str().to_string(),
            fmt_f64(ps),
            fmt_f64(tb),
            fmt_f64(mr),
        ]);
        t.push(row);
    }
    t
}

pub fn fineint(ctx: &Context, run: &mut Run) -> Result<()> {
    let fs = need(&ctx.cfg.fineint, "fineint")?;
    let mut opts = FineOptions::default();
    if let Some(t) = fs.threshold {
        opts.threshold = t;
    }
    if let Some(d) = fs.divergence_trigger {
        opts.divergence_trigger = d;
    }
    let range = fs.j_min..=fs.j_max;
    let c = match &fs.e {
        Some(region) => {
            let spec = need(&ctx.cfg.space, "space")?;
            for p in spec.inputs(ctx.base) {
                run.input(&p);
            }
            let space = spec.build(ctx.base)?;
            let e = region.build(&space)?;
            let p =
                fs.p.ok_or_else(|| Error::Config("[fineint] on a space needs `p`".into()))?;
            let samples = fs
                .points
                .iter()
                .map(|x| {
                    space
                        .nearest_vertex(x)
                        .ok_or_else(|| Error::Config("fineint needs vertex coordinates".into()))
                })
                .collect::<Result<Vec<_>>>()?;
            fine_interior(&space, &e, &samples, range, p, &opts, &ctx.cfg.solver)?
        }
        None => {
            let spec = need(&ctx.cfg.swiss, "swiss")?;
            fine_interior_swiss(spec, &fs.points, range, fs.m, &opts, &ctx.cfg.solver)?
        }
    };
    run.param("threshold", opts.threshold);
    run.param("divergence_trigger", opts.divergence_trigger);
    run.table("classification.csv", &classification_table(&c))?;
    for (i, p) in c.points.iter().enumerate() {
        println!("point {i}: {}", p.label.as_str());
    }
    Ok(())
}

pub fn transmission(ctx: &Context, run: &mut Run) -> Result<()> {
    let ts = need(&ctx.cfg.transmission, "transmission")?;
    let levels = ctx.levels()?;
    run.param("p", ts.p);
    let (mut hs, mut res) = (Vec::new(), Vec::new());
    for k in 0..levels {
        let h = ts.h * (-(k as f64)).exp2();
        let lms = LineMeasureSpace::new((ts.x[0], ts.x[1]), (ts.y[0], ts.y[1]), h, &|t| {
            ts.weight.eval(&[t])
        })?;
        let f = ts.data.sample(&lms.space)?;
        let sol = transmission_solve(&lms, &f, ts.p, &ctx.cfg.solver)?;
        if let Some(w) = &sol.warning {
            run.param(&format!("warning_level_{k}"), w);
            println!("warning: {w}");
        }
        let jr = jump_residual(&lms, &sol.u)?;
        hs.push(h);
        res.push(jr.max_norm);
        if k > 0 {
            continue;
        }
        let mut t = Table::new(["id", "x0", "x1", "u"]);
        for v in 0..lms.n_vertices() {
            let mut row = vec![v.to_string()];
            row.extend(coords(&lms.space, v));
            row.push(fmt_f64(sol.u[v]));
            t.push(row);
        }
        run.table("transmission_solution.csv", &t)?;
        let mut r = Table::new(["i", "x0", "residual"]);
        for &(i, val) in &jr.values {
            r.push(vec![
                i.to_string(),
                fmt_f64(
                    lms.space
                        .point(lms.vertex(i, lms.line_row))
                        .map_or(f64::NAN, |x| x[0]),
                ),
                fmt_f64(val),
            ]);
        }
        run.table("transmission_residual.csv", &r)?;
        let mut s = Summary::new();
        s.add("energy", sol.energy, ctx.cfg.solver.tol_energy * sol.energy);
        s.add(
            "linear_residual",
            sol.linear_residual.unwrap_or(f64::NAN),
            1e-14,
        );
        s.add("jump_residual_max", jr.max_norm, f64::NAN);
        s.add("iterations", sol.iterations as f64, 0.0);
        run.table("summary.csv", &s.0)?;
        println!(
            "jump residual {} at h = {}",
            fmt_f64(jr.max_norm),
            fmt_f64(h)
        );
    }
    if levels > 1 {
        let mut t = Table::new(["level", "h", "jump_residual_max", "ratio", "observed_order"]);
        for k in 0..levels as usize {
            let ratio = if k > 0 { res[k - 1] / res[k] } else { f64::NAN };
            t.push(vec![
                k.to_string(),
                fmt_f64(hs[k]),
                fmt_f64(res[k]),
                fmt_f64(ratio),
                fmt_f64(ratio.log2()),
            ]);
        }
        run.table("refinement.csv", &t)?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct CellRow {
    w: f64,
}

pub fn oned(ctx: &Context, run: &mut Run) -> Result<()> {
    let os = need(&ctx.cfg.oned, "oned")?;
    let atoms: Vec<(f64, f64)> = os.atoms.iter().map(|&[x, m]| (x, m)).collect();
    let [a, b] = os.interval;
    let m = match (&os.cells, &os.weight) {
        (Some(path), _) => {
            let path = ctx.base.join(path);
            run.input(&path);
            let w: Vec<f64> = csv::Reader::from_path(&path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
                .deserialize::<CellRow>()
                .map(|r| {
                    r.map(|r| r.w)
                        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
                })
                .collect::<Result<_>>()?;
            Measure1D::from_cells(a, b, os.h, w, &atoms)?
        }
        (None, Some(wf)) => Measure1D::from_fn(a, b, os.h, &|x| wf.eval(&[x]), &atoms)?,
        (None, None) => Measure1D::from_fn(a, b, os.h, &|_| 1.0, &atoms)?,
    };
    run.param("p", os.p);
    let inv = dirichlet_atom_invariance(&m, os.f0, os.f1, os.p, &ctx.cfg.solver)?;
    let mut t = Table::new(["id", "x", "u_with_atoms", "u_without_atoms", "difference"]);
    for v in 0..m.n_vertices() {
        t.push(vec![
            v.to_string(),
            fmt_f64(m.x(v)),
            fmt_f64(inv.u_with[v]),
            fmt_f64(inv.u_without[v]),
            fmt_f64(inv.u_with[v] - inv.u_without[v]),
        ]);
    }
    run.table("oned_solution.csv", &t)?;
    let pb = poincare_bound_1d(&inv.u_with, &m, (a, b), os.p, os.p)?;
    let mut s = Summary::new();
    s.flag("bitwise_identical", inv.bitwise_identical);
    s.add(
        "capacity_with_atoms",
        inv.capacity_with,
        ctx.cfg.solver.tol_kkt,
    );
    s.add(
        "capacity_without_atoms",
        inv.capacity_without,
        ctx.cfg.solver.tol_kkt,
    );
    s.add("poincare_lhs", pb.lhs, 1e-9 * pb.lhs);
    s.add("poincare_rhs", pb.rhs, 1e-9 * pb.rhs);
    s.flag("poincare_passed", pb.passed);
    if os.battery > 0 {
        let n = if ctx.quick {
            os.battery.div_ceil(10)
        } else {
            os.battery
        };
        let bat = poincare_battery(run.seed, n)?;
        s.add("battery_instances", bat.instances as f64, 0.0);
        s.add("battery_failures", bat.failures as f64, 0.0);
        s.add("battery_min_rhs_over_lhs", bat.worst_ratio, 1e-9);
    }
    run.table("oned_summary.csv", &s.0)?;
    if !os.p_to_one.is_empty() {
        let rep = p_to_one_demo(os.h, &[1, 4, 16, 64], &os.p_to_one, &ctx.cfg.solver)?;
        let mut e = Table::new(["j", "energy", "exact", "abs_error"]);
        for r in &rep.energies {
            e.push(vec![
                r.j.to_string(),
                fmt_f64(r.energy),
                fmt_f64(r.exact),
                fmt_f64((r.energy - r.exact).abs()),
            ]);
        }
        run.table("p_to_one_energies.csv", &e)?;
        let mut st = Table::new(["p", "energy", "left_fraction", "half_width", "h"]);
        for r in &rep.solves {
            st.push(vec![
                fmt_f64(r.p),
                fmt_f64(r.energy),
                fmt_f64(r.left_fraction),
                fmt_f64(r.half_width),
                fmt_f64(rep.h),
            ]);
        }
        run.table("p_to_one_solves.csv", &st)?;
    }
    println!("atom invariance bitwise: {}", inv.bitwise_identical);
    Ok(())
}

/// Runs the battery; returns whether every criterion passed.
pub fn suite(ctx: &Context, run: &mut Run) -> Result<bool> {
    let opts = BatteryOptions {
        seed: run.seed,
        quick: ctx.quick,
        config: ctx.cfg.solver,
    };
    let ids = ctx
        .cfg
        .suite
        .as_ref()
        .map(|s| s.criteria.clone())
        .unwrap_or_default();
    run.param("quick", ctx.quick);
    let reports = battery::run(&opts, &ids)?;
    let mut t = Table::new([
        "criterion",
        "passed",
        "quantity",
        "value",
        "reference",
        "tolerance",
    ]);
    let opt = |x: Option<f64>| x.map_or(String::new(), fmt_f64);
    for r in &reports {
        println!("{}", r.line());
        run.param(
            &format!("criterion_{}_elapsed_s", r.id),
            r.elapsed.as_secs_f64(),
        );
        for m in &r.measured {
            t.push(vec![
                r.id.to_string(),
                u8::from(r.passed).to_string(),
                m.name.clone(),
                fmt_f64(m.value),
                opt(m.reference),
                opt(m.tolerance),
            ]);
        }
    }
    run.table("suite.csv", &t)?;
    let passed = reports.iter().filter(|r| r.passed).count();
    println!("{passed}/{} criteria passed", reports.len());
    Ok(passed == reports.len())
}
