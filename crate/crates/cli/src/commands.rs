use crate::report::Emitter;
use crate::sources::{parse_tag, power_free_tag, sequence, spec, Sieves};
use crate::*;
use anyhow::{bail, ensure, Context, Result};
use mdlab_core::anqie_flow::{
    averaged_rigidity_on, inadmissible_windows, projection_rigidity_on, rigidity_floor,
    window_census, RigidityClosedForm, WindowCensus,
};
use mdlab_core::correlation::{
    rigidity_norm_on, rigidity_sequence, shift_correlation, MirskyTable,
};
use mdlab_core::dirichlet::{
    characters_mod, hybrid_mean_value_ratio, load_coefficients, mean_square, orthogonality_check,
    parseval_ratio, step_ceiling, ORTHOGONALITY_LIMIT,
};
use mdlab_core::mean_state::{cesaro_inner, shift, CesaroMean, InnerProductTrace};
use mdlab_core::pretentious::{
    character_distance_floor, halasz_bound_pair, m_of_f, m_over_characters,
};
use mdlab_core::short_progression::{divisor_decomposition_on, second_moment_on, MomentReport};
use mdlab_core::sieve::{evaluate_spec, FactorizationOracle, FunctionTag, SeqWindow};
use mdlab_core::verify::{self, CriterionResult, CRITERIA};
use serde::Serialize;

/// Runs one subcommand; `false` means the run completed but some check failed.
pub fn dispatch(
    cmd: &Command,
    global: &Global,
    sieves: &mut Sieves,
    out: &mut Emitter,
) -> Result<bool> {
    match cmd {
        Command::Sieve(a) => sieve(a, sieves, out)?,
        Command::Inner(a) => inner(a, sieves, out)?,
        Command::Corr(a) => corr(a, sieves, out)?,
        Command::Moment(a) => moment(a, sieves, out)?,
        Command::Decomp(a) => decomp(a, sieves, out)?,
        Command::Distance(a) => distance(a, out)?,
        Command::Halasz(a) => halasz(a, out)?,
        Command::Dirichlet(d) => dirichlet(d, global.seed, out)?,
        Command::Flow(a) => flow(a, sieves, out)?,
        Command::Rigidity(r) => rigidity(r, sieves, out)?,
        Command::Verify(a) => return verify_suite(a, out),
    }
    Ok(true)
}

fn to_usize(v: u64, what: &str) -> Result<usize> {
    usize::try_from(v).with_context(|| format!("{what} = {v} does not fit in memory"))
}

/// max·max + base, failing on overflow.
fn cover(base: u64, a: u64, b: u64) -> Result<usize> {
    let v = a
        .checked_mul(b)
        .and_then(|p| p.checked_add(base))
        .context("range overflows 64 bits")?;
    to_usize(v, "range")
}

#[derive(Serialize)]
struct SieveSummary {
    function: String,
    start: u64,
    length: u64,
    sum: i64,
    nonzero: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_mismatches: Option<u64>,
}

fn sieve(a: &SieveArgs, sieves: &mut Sieves, out: &mut Emitter) -> Result<()> {
    ensure!(a.start >= 1 && a.n >= 1, "need start >= 1 and N >= 1");
    let tag = parse_tag(&a.function)?;
    let w = sieves.get(tag, a.start, to_usize(a.n, "N")?)?;
    let v = w.small().context("sieved window is not compact")?;
    let oracle_mismatches = if a.check {
        let oracle = FactorizationOracle::new(w.end() - 1)?;
        let exact = |n: u64| match tag {
            FunctionTag::Mobius => oracle.mobius(n),
            FunctionTag::MobiusSquared => oracle.power_free(n, 2),
            FunctionTag::PowerFree(r) => oracle.power_free(n, r as u32),
            FunctionTag::Liouville => oracle.liouville(n),
        };
        Some(
            v.iter()
                .zip(a.start..)
                .filter(|&(&x, n)| x != exact(n))
                .count() as u64,
        )
    } else {
        None
    };
    out.record_cache(sieves.take_records());
    for (&x, n) in v.iter().zip(a.start..) {
        out.csv("n,value", format!("{n},{x}"));
    }
    let summary = SieveSummary {
        function: tag.to_string(),
        start: a.start,
        length: a.n,
        sum: v.iter().map(|&x| x as i64).sum(),
        nonzero: v.iter().filter(|&&x| x != 0).count() as u64,
        oracle_mismatches,
    };
    out.emit("SieveSummary", &summary)?;
    if let Some(m) = oracle_mismatches {
        ensure!(m == 0, "{m} values disagree with trial factorization");
    }
    Ok(())
}

#[derive(Serialize)]
struct InnerReport<'a> {
    f: &'a str,
    g: &'a str,
    shift: usize,
    #[serde(flatten)]
    trace: InnerProductTrace,
}

fn inner(a: &InnerArgs, sieves: &mut Sieves, out: &mut Emitter) -> Result<()> {
    let mean = CesaroMean::new(a.n.0.clone())?;
    let len = to_usize(mean.max(), "N")?;
    let f = sequence(sieves, &a.f, len)?;
    let g_name = a.g.as_deref().unwrap_or(&a.f);
    let g = shift(&sequence(sieves, g_name, len + a.shift)?, a.shift)?;
    let trace = cesaro_inner(&f, &g, &mean)?;
    out.record_cache(sieves.take_records());
    for (n, z) in trace.cutoffs.iter().zip(&trace.partial_values) {
        out.csv("N,re,im", format!("{n},{},{}", z.re, z.im));
    }
    out.emit(
        "InnerProductTrace",
        &InnerReport {
            f: &a.f,
            g: g_name,
            shift: a.shift,
            trace,
        },
    )
}

#[derive(Serialize)]
struct CorrelationRow {
    r: u32,
    m: u64,
    #[serde(rename = "N")]
    n: u64,
    empirical: f64,
    oracle: f64,
    oracle_error: f64,
    difference: f64,
}

fn corr(a: &CorrArgs, sieves: &mut Sieves, out: &mut Emitter) -> Result<()> {
    ensure!(a.n >= 1, "N must be >= 1");
    let r = u32::try_from(a.r)?;
    let table = MirskyTable::new(r, a.oracle_cutoff)?;
    let w = sieves.get(power_free_tag(r)?, 1, cover(a.n, a.m.max(), 1)?)?;
    out.record_cache(sieves.take_records());
    for &m in &a.m.0 {
        let empirical = shift_correlation(&w, &w, to_usize(m, "m")?, a.n)?.re;
        let o = table.oracle(m)?;
        let row = CorrelationRow {
            r,
            m,
            n: a.n,
            empirical,
            oracle: o.partial_value,
            oracle_error: o.abs_error(),
            difference: empirical - o.partial_value,
        };
        out.csv(
            "r,m,N,empirical,oracle,oracle_error",
            format!(
                "{r},{m},{},{},{},{}",
                a.n, row.empirical, row.oracle, row.oracle_error
            ),
        );
        out.emit("ShiftCorrelation", &row)?;
    }
    Ok(())
}

fn moment(a: &MomentArgs, sieves: &mut Sieves, out: &mut Emitter) -> Result<()> {
    ensure!(a.n >= 1, "N must be >= 1");
    let mu = sieves.get(FunctionTag::Mobius, 1, cover(a.n, a.h.max(), a.k.max())?)?;
    out.record_cache(sieves.take_records());
    for &h in &a.h.0 {
        for &k in &a.k.0 {
            let rep = second_moment_on(&mu, a.n, h, k)?;
            out.csv(MomentReport::CSV_HEADER, rep.csv_row());
            out.emit("MomentReport", &rep)?;
        }
    }
    Ok(())
}

fn decomp(a: &DecompArgs, sieves: &mut Sieves, out: &mut Emitter) -> Result<()> {
    ensure!(a.x >= 1, "X must be >= 1");
    let base = a.x.checked_mul(2).context("X overflows")?;
    let mu = sieves.get(FunctionTag::Mobius, 1, cover(base, a.h, a.k.max())?)?;
    out.record_cache(sieves.take_records());
    for &k in &a.k.0 {
        let rep = divisor_decomposition_on(&mu, a.x, a.h, k)?;
        out.csv(
            "X,h,k,lhs,rhs,residual,residual_over_x",
            format!(
                "{},{},{},{},{},{},{}",
                rep.x, rep.h, rep.k, rep.lhs, rep.rhs, rep.residual, rep.residual_over_x
            ),
        );
        out.emit("DecompositionReport", &rep)?;
    }
    Ok(())
}

fn distance(a: &DistanceArgs, out: &mut Emitter) -> Result<()> {
    if a.floor {
        let count = a.grid.max(2);
        let dt = 2.0 * a.t_max / (count - 1) as f64;
        let grid: Vec<f64> = (0..count).map(|j| -a.t_max + j as f64 * dt).collect();
        let rep = character_distance_floor(a.k, a.x, &grid)?;
        out.csv(
            "k,X,soft_floor,minimum,argmin_character,argmin_t",
            format!(
                "{},{},{},{},{},{}",
                rep.k, rep.x, rep.soft_floor, rep.minimum, rep.argmin_character, rep.argmin_t
            ),
        );
        return out.emit("FloorReport", &rep);
    }
    let f = spec(&a.f)?;
    let rep = if a.characters {
        m_over_characters(&f, a.k, a.x, a.t_max)?
    } else {
        m_of_f(&f, a.x, a.t_max, a.k, a.grid)?
    };
    for (t, v) in rep.t_grid.iter().zip(&rep.values) {
        out.csv("t,distance_sq", format!("{t},{v}"));
    }
    out.emit("DistanceReport", &rep)
}

fn halasz(a: &HalaszArgs, out: &mut Emitter) -> Result<()> {
    let rep = halasz_bound_pair(&spec(&a.f)?, a.x, a.k, a.t_max)?;
    out.csv(
        "x,k,T,lhs,M,rhs_shape,ratio",
        format!(
            "{},{},{},{},{},{},{}",
            rep.x, rep.k, rep.t_max, rep.lhs, rep.m, rep.rhs_shape, rep.ratio
        ),
    );
    out.emit("HalaszReport", &rep)
}

#[derive(Serialize)]
struct Orthogonality {
    k: u64,
    characters: usize,
    max_defect: f64,
}

fn dirichlet(cmd: &DirichletCommand, seed: u64, out: &mut Emitter) -> Result<()> {
    match cmd {
        DirichletCommand::Characters(a) => {
            let chars = characters_mod(a.k)?;
            for chi in &chars {
                let info = chi.info();
                out.csv("label,order", format!("{},{}", info.label, info.order));
                out.emit("CharacterInfo", &info)?;
            }
            if a.check {
                ensure!(
                    a.k <= ORTHOGONALITY_LIMIT,
                    "orthogonality check needs k <= {ORTHOGONALITY_LIMIT}"
                );
                let max_defect = orthogonality_check(a.k)?;
                out.emit(
                    "Orthogonality",
                    &Orthogonality {
                        k: a.k,
                        characters: chars.len(),
                        max_defect,
                    },
                )?;
            }
        }
        DirichletCommand::MeanSquare(a) => {
            let top = a.x.checked_mul(2).context("X overflows")?;
            let step = a.step.unwrap_or_else(|| step_ceiling(top));
            let rep = mean_square(&spec(&a.f)?, a.k, a.x, a.t_max, step)?;
            out.csv(
                "k,X,T,step,total,half_step_total,error_estimate",
                format!(
                    "{},{},{},{},{},{},{}",
                    rep.k,
                    rep.x,
                    rep.t_max,
                    rep.step,
                    rep.total,
                    rep.half_step_total,
                    rep.error_estimate
                ),
            );
            out.emit("MeanSquareReport", &rep)?;
        }
        DirichletCommand::Hybrid(a) => {
            let rep = hybrid_mean_value_ratio(a.k, a.n, a.t_max, a.trials, seed)?;
            for (i, r) in rep.ratios.iter().enumerate() {
                out.csv("trial,ratio", format!("{i},{r}"));
            }
            out.emit("HybridSweep", &rep)?;
        }
        DirichletCommand::Parseval(a) => {
            let coeffs: SeqWindow = match &a.coeffs {
                Some(path) => load_coefficients(path, a.coeffs_start)
                    .with_context(|| format!("loading coefficients from {}", path.display()))?,
                None => {
                    let top = a.x.checked_mul(4).context("X overflows")?;
                    evaluate_spec(&spec(&a.f)?, 1, to_usize(top, "4X")?)?
                }
            };
            let rep = parseval_ratio(&coeffs, a.h, a.x)?;
            out.csv(
                "X,h,lhs,rhs,ratio",
                format!("{},{},{},{},{}", rep.x, rep.h, rep.lhs, rep.rhs, rep.ratio),
            );
            out.emit("ParsevalReport", &rep)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct CensusRow<'a> {
    sequence: &'a str,
    #[serde(rename = "L")]
    l: usize,
    #[serde(rename = "N")]
    n: u64,
    distinct_count: u64,
    bits_per_symbol: f64,
    inadmissible: usize,
}

fn flow(a: &FlowArgs, sieves: &mut Sieves, out: &mut Emitter) -> Result<()> {
    let len = to_usize(a.n, "N")?;
    let (name, w) = match &a.shifts {
        Some(s) => {
            let base = sieves.get(FunctionTag::MobiusSquared, 1, cover(a.n, s.max(), 1)?)?;
            let v = base.small().context("μ² window is not compact")?;
            let prod: Vec<i8> = (0..len)
                .map(|i| s.0.iter().map(|&m| v[i + m as usize]).product())
                .collect();
            (
                format!("prod mu2(n+m), m in {{{s}}}"),
                SeqWindow::from_small(1, prod)?,
            )
        }
        None => (a.f.clone(), sequence(sieves, &a.f, len)?),
    };
    out.record_cache(sieves.take_records());
    for &l in &a.l.0 {
        let census: WindowCensus = window_census(&w, to_usize(l, "L")?, a.n)?;
        out.csv(WindowCensus::CSV_HEADER, census.csv_row());
        let row = CensusRow {
            sequence: &name,
            l: census.l,
            n: census.n,
            distinct_count: census.distinct_count,
            bits_per_symbol: census.bits_per_symbol(),
            inadmissible: inadmissible_windows(&census).len(),
        };
        out.emit("WindowCensus", &row)?;
    }
    Ok(())
}

fn rigidity(cmd: &RigidityCommand, sieves: &mut Sieves, out: &mut Emitter) -> Result<()> {
    match cmd {
        RigidityCommand::Norm(a) => {
            let r = u32::try_from(a.r)?;
            let table = MirskyTable::new(r, a.oracle_cutoff)?;
            let nj = rigidity_sequence(r, a.j)?;
            let w = sieves.get(power_free_tag(r)?, 1, cover(a.n, nj, a.l.max())?)?;
            out.record_cache(sieves.take_records());
            for &l in &a.l.0 {
                let rep = rigidity_norm_on(&w, &table, a.j, l, a.n)?;
                out.csv(
                    "r,j,l,N,empirical,closed_form,closed_form_error",
                    format!(
                        "{},{},{},{},{},{},{}",
                        rep.r,
                        rep.j,
                        rep.l,
                        rep.n,
                        rep.empirical,
                        rep.closed_form,
                        rep.closed_form_error
                    ),
                );
                out.emit("RigidityNorm", &rep)?;
            }
        }
        RigidityCommand::Projection(a) => {
            let closed =
                RigidityClosedForm::new(a.j, mdlab_core::correlation::DEFAULT_ORACLE_CUTOFF)?;
            let nj = rigidity_sequence(2, a.j)?;
            let base = a.n.checked_add(a.i).context("N + i overflows")?;
            let w = sieves.get(FunctionTag::MobiusSquared, 1, cover(base, nj, a.l.max())?)?;
            out.record_cache(sieves.take_records());
            for &l in &a.l.0 {
                let rep = projection_rigidity_on(&w, &closed, a.i, l, a.n)?;
                out.csv(
                    "i,l,j,N,empirical,closed_form,closed_form_error",
                    format!(
                        "{},{},{},{},{},{},{}",
                        rep.i,
                        rep.l,
                        rep.j,
                        rep.n,
                        rep.empirical,
                        rep.closed_form,
                        rep.closed_form_error
                    ),
                );
                out.emit("ProjectionRigidity", &rep)?;
            }
        }
        RigidityCommand::Averaged(a) => {
            ensure!(a.h >= 1, "h must be >= 1");
            let closed =
                RigidityClosedForm::new(a.j, mdlab_core::correlation::DEFAULT_ORACLE_CUTOFF)?;
            let nj = rigidity_sequence(2, a.j)?;
            let base = a.n.checked_add(a.i).context("N + i overflows")?;
            let w = sieves.get(FunctionTag::MobiusSquared, 1, cover(base, nj, a.h - 1)?)?;
            out.record_cache(sieves.take_records());
            let rep = averaged_rigidity_on(&w, &closed, a.i, a.h, a.n)?;
            out.csv(
                "i,j,h,N,empirical,closed_form",
                format!(
                    "{},{},{},{},{},{}",
                    rep.i, rep.j, rep.h, rep.n, rep.empirical, rep.closed_form
                ),
            );
            out.emit("AveragedRigidity", &rep)?;
        }
        RigidityCommand::Floor(a) => {
            let rep = rigidity_floor(a.j, a.delta)?;
            out.csv(
                "j,delta,h,min_closed_form,argmin_l,reference,ratio",
                format!(
                    "{},{},{},{},{},{},{}",
                    rep.j,
                    rep.delta,
                    rep.h,
                    rep.min_closed_form,
                    rep.argmin_l,
                    rep.reference,
                    rep.ratio
                ),
            );
            out.emit("RigidityFloor", &rep)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifySummary {
    suite: String,
    total: usize,
    passed: usize,
    failed: Vec<u8>,
}

fn verify_suite(a: &VerifyArgs, out: &mut Emitter) -> Result<bool> {
    let ids: Vec<u8> = match &a.criteria {
        Some(list) => list
            .0
            .iter()
            .map(|&id| match CRITERIA.iter().find(|(c, _)| *c as u64 == id) {
                Some(&(c, _)) => Ok(c),
                None => bail!(
                    "unknown criterion {id}; valid ids are 1..={}",
                    CRITERIA.len()
                ),
            })
            .collect::<Result<_>>()?,
        None => CRITERIA.iter().map(|&(c, _)| c).collect(),
    };
    let mut results: Vec<CriterionResult> = Vec::with_capacity(ids.len());
    for id in ids {
        let r = verify::run(id);
        eprintln!("{}", r.line());
        out.csv(
            "id,title,passed,elapsed_secs,budget_secs",
            format!(
                "{},{},{},{:.3},{}",
                r.id, r.title, r.passed, r.elapsed_secs, r.budget_secs
            ),
        );
        out.emit("CriterionResult", &r)?;
        results.push(r);
    }
    let failed: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    let summary = VerifySummary {
        suite: a.suite.clone(),
        total: results.len(),
        passed: results.len() - failed.len(),
        failed,
    };
    eprintln!("{} of {} criteria passed", summary.passed, summary.total);
    out.emit("VerifySummary", &summary)?;
    Ok(summary.failed.is_empty())
}
