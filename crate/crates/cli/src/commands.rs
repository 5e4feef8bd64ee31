use std::fs::{self, File};
use std::io::{self, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use resonorm::acceptance::{run_criterion_seeded, CriterionOutcome, Verdict};
use resonorm::diophantine::{periodic_approximations, psi_table, ApproxOptions, ExactFrequency};
use resonorm::dynamics::{stability_runs, Projector, StabilityFamily};
use resonorm::normalform::{map_distance, normal_form, NormalFormOptions, QChoice, ThresholdMode};
use resonorm::splitting::{
    manifold_pair, mu_sweep, splitting_matrix, thm_split_experiment, GeneratingFunction, ResonantModel,
    ScalingOptions,
};
use resonorm::TrigPoly;

use crate::config::{self, ConfigError, NfConfig, SplitConfig, SplitMode, StabConfig, StabFamily};

fn frequency(spec: &str) -> Result<ExactFrequency> {
    spec.parse::<ExactFrequency>().with_context(|| format!("frequency spec {spec:?}"))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(io::BufWriter::new(file), value)?;
    Ok(())
}

fn join_ints(k: &[i64]) -> String {
    k.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn psi(omega: &str, qmax: u32, out: Option<&Path>) -> Result<()> {
    let w = frequency(omega)?;
    let table = psi_table(&w, qmax)?;
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut csv = csv::Writer::from_writer(sink);
    csv.write_record(["q", "psi", "witness"])?;
    for bp in &table.breakpoints {
        csv.write_record([bp.q.to_string(), format!("{:.17e}", bp.psi), join_ints(&bp.witness)])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn approx(omega: &str, q: f64, out: Option<&Path>) -> Result<()> {
    let w = frequency(omega)?;
    let report = periodic_approximations(&w, q, &ApproxOptions::default())?;
    let vectors: Vec<_> = report
        .vectors
        .iter()
        .zip(&report.constants)
        .map(|(v, c)| {
            json!({
                "lift": v.lift(),
                "period": v.period().to_string(),
                "values": v.values(),
                "constant": c,
            })
        })
        .collect();
    let doc = json!({
        "omega": w.to_string(),
        "q": report.q,
        "psi": report.psi,
        "det": report.det,
        "coords": report.coords,
        "vectors": vectors,
    });
    match out {
        Some(p) => write_json(p, &doc)?,
        None => println!("{}", serde_json::to_string_pretty(&doc)?),
    }
    Ok(())
}

pub struct NfArgs<'a> {
    pub omega: &'a str,
    pub ham: &'a Path,
    pub k: u32,
    pub kappa: u32,
    pub q: Option<f64>,
    pub record: bool,
    pub config: Option<&'a Path>,
    pub out: &'a Path,
}

pub fn nf(args: &NfArgs) -> Result<()> {
    let w = frequency(args.omega)?;
    let text = fs::read_to_string(args.ham)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", args.ham.display())))?;
    let f = TrigPoly::from_text(&text).with_context(|| format!("parsing {}", args.ham.display()))?;
    let mut opts: NormalFormOptions = match args.config {
        Some(p) => config::load::<NfConfig>(p)?.normal_form,
        None => NormalFormOptions::default(),
    };
    if let Some(q) = args.q {
        opts.q = QChoice::Fixed(q);
    }
    if args.record {
        opts.mode = ThresholdMode::Record;
    }
    let mut result = normal_form(&w, &f, args.k, args.kappa, &opts)?;
    if args.k > args.kappa {
        result.ledger.final_norms.map_distance = Some(map_distance(&result, 0)?);
    }
    let out = args.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("resonant.poly"), result.resonant.to_text())?;
    fs::write(out.join("remainder.poly"), result.remainder.to_text())?;
    fs::write(out.join("average.poly"), result.avg_f.to_text())?;
    for (i, g) in result.generators.iter().enumerate() {
        fs::write(out.join(format!("generator_{:02}.poly", i + 1)), g.chi.to_text())?;
    }
    write_json(&out.join("ledger.json"), &json!({
        "omega": w.to_string(),
        "ledger": result.ledger,
    }))?;
    let mut csv = csv::Writer::from_path(out.join("ledger.csv"))?;
    csv.write_record([
        "kappa", "j", "lift", "period", "radius", "regularity", "nu", "t_nu", "u_norm", "u_prime_norm",
        "field_norm", "remainder_norm", "truncation", "violations",
    ])?;
    for s in &result.ledger.steps {
        csv.write_record([
            s.kappa.to_string(),
            s.j.to_string(),
            join_ints(&s.lift),
            s.period.clone(),
            s.radius.to_string(),
            s.regularity.to_string(),
            s.step.nu.to_string(),
            s.step.t_nu.to_string(),
            s.step.u_norm.to_string(),
            s.step.u_prime_norm.to_string(),
            s.step.field_norm.to_string(),
            s.remainder_norm.to_string(),
            s.truncation.to_string(),
            s.step.violations.join(" | "),
        ])?;
    }
    csv.flush()?;
    let fin = &result.ledger.final_norms;
    println!(
        "kappa = {}: |f_kappa| = {:.3e}, |g_kappa| = {:.3e}, {} steps, {} threshold violations",
        args.kappa,
        fin.remainder,
        fin.resonant,
        result.ledger.steps.len(),
        result.ledger.violations()
    );
    Ok(())
}

pub fn stab(path: &Path) -> Result<()> {
    let cfg: StabConfig = config::load(path)?;
    let w = frequency(&cfg.omega)?;
    let family = match cfg.family {
        StabFamily::Demo => StabilityFamily::Demo { radius: cfg.radius },
        StabFamily::Unperturbed => StabilityFamily::Unperturbed { radius: cfg.radius },
        StabFamily::Scaled => {
            let Some(ham) = &cfg.ham else {
                return Err(ConfigError("family = \"scaled\" needs ham = <file>".into()).into());
            };
            let ham = config::resolve(path, ham);
            let text = fs::read_to_string(&ham)
                .map_err(|e| ConfigError(format!("cannot read {}: {e}", ham.display())))?;
            StabilityFamily::Scaled(TrigPoly::from_text(&text)?)
        }
    };
    let (report, traces) = stability_runs(&w, &family, &cfg.eps, cfg.k, cfg.delta, cfg.horizon)?;
    let out = config::resolve(path, &cfg.out);
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let projector = Projector::new(&w)?;
    let n = w.n();
    for (i, (row, traj)) in report.rows.iter().zip(&traces).enumerate() {
        let mut csv = csv::Writer::from_path(out.join(format!("run_{:02}.csv", i + 1)))?;
        csv.write_record(["t", "drift", "energy"])?;
        let x0 = &traj.states[0];
        for ((t, z), e) in traj.times.iter().zip(&traj.states).zip(&traj.energy) {
            let d: Vec<f64> = z[n..].iter().zip(&x0[n..]).map(|(a, b)| a - b).collect();
            csv.write_record([t.to_string(), projector.norm(&d).to_string(), e.to_string()])?;
        }
        csv.flush()?;
        println!(
            "eps = {:.3e}: T_obs = {:.4e}, predicted {:.4e}, max drift {:.3e}",
            row.eps, row.t_obs, row.t_pred, row.max_drift
        );
    }
    write_json(&out.join("summary.json"), &report)?;
    match report.fit {
        Some(fit) => println!(
            "T_obs ~ eps^{:.3} (predicted {:.3}, tau = {:.3})",
            fit.slope, report.predicted_exponent, report.tau
        ),
        None => println!("no fit: fewer than two runs left the drift ball"),
    }
    Ok(())
}

fn write_mesh(path: &Path, g: &GeneratingFunction) -> Result<()> {
    let mut csv = csv::Writer::from_path(path)?;
    csv.write_record(["theta1", "theta2", "action1", "action2"])?;
    for p in &g.mesh {
        csv.write_record([p.theta1, p.theta2, p.action1, p.action2].map(|x| x.to_string()))?;
    }
    csv.flush()?;
    Ok(())
}

fn write_grid(path: &Path, g: &GeneratingFunction) -> Result<()> {
    let mut csv = csv::Writer::from_path(path)?;
    csv.write_record(["theta1", "theta2", "s", "action1", "action2"])?;
    let nodes = g.grid.nodes();
    for (i1, t1) in g.grid.angles().into_iter().enumerate() {
        for (i2, &t2) in nodes.iter().enumerate() {
            csv.write_record(
                [t1, t2, g.value(t1, t2), g.action1.at(i1, i2), g.action2.at(i1, i2)].map(|x| x.to_string()),
            )?;
        }
    }
    csv.flush()?;
    Ok(())
}

pub fn split(path: &Path) -> Result<()> {
    let cfg: SplitConfig = config::load(path)?;
    let varpi = frequency(&cfg.varpi)?;
    let model = ResonantModel::pendulum(varpi, cfg.eps, cfg.lambda, cfg.mu);
    let out = config::resolve(path, &cfg.out);
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    match cfg.mode {
        SplitMode::Single => {
            let (u, s) = manifold_pair(&model, &cfg.manifold)?;
            let report = splitting_matrix(&u, &s, &model)?;
            write_mesh(&out.join("mesh_unstable.csv"), &u)?;
            write_mesh(&out.join("mesh_stable.csv"), &s)?;
            write_grid(&out.join("s_unstable.csv"), &u)?;
            write_grid(&out.join("s_stable.csv"), &s)?;
            let residuals = |g: &GeneratingFunction| {
                json!({
                    "fit": g.fit_residual,
                    "exactness": g.exactness_residual,
                    "graph": g.graph_residual,
                    "winding": g.winding,
                })
            };
            write_json(&out.join("splitting.json"), &json!({
                "config": cfg,
                "fast_frequency": model.fast_frequency(),
                "torus": u.torus,
                "unstable": residuals(&u),
                "stable": residuals(&s),
                "splitting": report,
            }))?;
            println!(
                "angles {:?}, tangential {:.4e}, degenerate {}",
                report.angles, report.tangential, report.degenerate
            );
        }
        SplitMode::MuSweep => {
            if cfg.mus.is_empty() {
                return Err(ConfigError("mode = \"mu-sweep\" needs a nonempty mus list".into()).into());
            }
            let sweep = mu_sweep(&model, &cfg.mus, &cfg.manifold)?;
            let mut csv = csv::Writer::from_path(out.join("mu_sweep.csv"))?;
            csv.write_record(["mu", "tangential", "transverse", "closeness"])?;
            for r in &sweep.rows {
                csv.write_record(
                    [r.mu, r.report.tangential, r.report.transverse, r.closeness].map(|x| x.to_string()),
                )?;
            }
            csv.flush()?;
            write_json(&out.join("splitting.json"), &json!({ "config": cfg, "sweep": sweep }))?;
            println!(
                "tangential ~ mu^{:.3}, |tangential| / mu spread {:.3}",
                sweep.tangential_fit.slope, sweep.constant_spread
            );
        }
        SplitMode::Scaling => {
            if cfg.eps_list.is_empty() {
                return Err(ConfigError("mode = \"scaling\" needs a nonempty eps_list".into()).into());
            }
            let opts = ScalingOptions {
                k: cfg.scaling.k,
                c: cfg.scaling.c,
                radius: cfg.scaling.radius,
                manifold: cfg.manifold.clone(),
            };
            let rep = thm_split_experiment(&model, &cfg.eps_list, &opts)?;
            let mut csv = csv::Writer::from_path(out.join("scaling.csv"))?;
            csv.write_record(["eps", "lambda", "mu", "fast_frequency", "angle", "bound"])?;
            for r in &rep.rows {
                csv.write_record(
                    [r.eps, r.lambda, r.mu, r.fast_frequency, r.angle, r.bound].map(|x| x.to_string()),
                )?;
            }
            csv.flush()?;
            write_json(&out.join("splitting.json"), &json!({ "config": cfg, "scaling": rep }))?;
            println!("angle ~ bound^{:.3}", rep.fit.slope);
        }
    }
    Ok(())
}

/// Runs the acceptance criteria; fails when any check outside the
/// known-red list fails.
pub fn check(criteria: &[u32], seed: u64, json_out: Option<&Path>) -> Result<()> {
    let list: Vec<u32> = if criteria.is_empty() { (1..=10).collect() } else { criteria.to_vec() };
    let mut outcomes: Vec<CriterionOutcome> = Vec::new();
    for &n in &list {
        let o = run_criterion_seeded(n, seed)?;
        let over = if o.seconds > o.budget_seconds { " [over budget]" } else { "" };
        println!("{}{over}", o.line());
        outcomes.push(o);
    }
    if let Some(p) = json_out {
        write_json(p, &outcomes)?;
    }
    let failed: Vec<u32> = outcomes
        .iter()
        .filter(|o| o.verdict() == Verdict::Fail)
        .map(|o| o.number)
        .collect();
    let known = outcomes.iter().filter(|o| o.verdict() == Verdict::KnownRed).count();
    println!(
        "{} passed, {known} known red, {} failed",
        outcomes.iter().filter(|o| o.verdict() == Verdict::Pass).count(),
        failed.len()
    );
    if !failed.is_empty() {
        bail!("criteria {failed:?} failed");
    }
    Ok(())
}
