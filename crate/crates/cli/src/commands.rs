use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use mcb::confidence::{amuc, muc_points, McbReport};
use mcb::sim::{
    compare_selectors, run_coverage_experiment_with, write_coverage_csv, write_muc_csv,
    AlgorithmChoice, SimConfig,
};
use mcb::vscs::{vscs_levels, VscsReport};
use mcb::{build_ensemble, read_csv, select, standardize, Dataset, SelectorSpec};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::args::{Cli, Command, DataArgs, Format, OutputArgs, SelectorName, TuningArgs};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

const DEFAULT_SEED: u64 = 1;

pub fn run(cli: &Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    match &cli.command {
        Command::FitMcb {
            data,
            selector,
            boot,
            alpha,
            out,
        } => {
            check_alphas(alpha)?;
            check_b(boot.b)?;
            let ds = load(data)?;
            let spec = selector.tuning.spec(selector.selector, seed);
            let method = boot.method.resolve(spec.kind);
            let original = select(&ds, &spec)?;
            let ens = build_ensemble(&ds, &spec, boot.b, method, seed)?;
            let muc = AlgorithmChoice::from(boot.algorithm).build(&ens)?;
            let reports = alpha
                .iter()
                .map(|&a| McbReport::new(&muc, a, &ds.names))
                .collect::<mcb::Result<Vec<_>>>()?;

            println!(
                "n = {}, p = {}, selector {}, B = {}, {:?} search",
                ds.n(),
                ds.p(),
                spec.label(),
                boot.b,
                muc.algorithm
            );
            println!("selected on original data: {}", original.model.names(&ds.names).join(" "));
            for r in &reports {
                println!(
                    "{:.0}% MCB: width {}, BCR {:.3}, cardinality {}",
                    100.0 * (1.0 - r.alpha),
                    r.width,
                    r.bcr,
                    r.cardinality
                );
                println!("  LBM: {}", braces(&r.lbm));
                println!("  UBM: {}", braces(&r.ubm));
            }

            let frequencies: serde_json::Map<String, Value> = ds
                .names
                .iter()
                .zip(&ens.frequencies)
                .map(|(n, f)| (n.clone(), json!(f)))
                .collect();
            let doc = json!({
                "config": {
                    "command": "fit-mcb",
                    "data": data.data,
                    "response": data.response,
                    "selector": spec,
                    "alpha": alpha,
                    "B": boot.b,
                    "method": method,
                    "algorithm": muc.algorithm,
                    "seed": seed,
                    "threads": cli.threads,
                },
                "n": ds.n(),
                "p": ds.p(),
                "predictors": ds.names,
                "selected_model": original.model.names(&ds.names),
                "frequencies": frequencies,
                "agreement_rate": ens.agreement_rate(),
                "reports": reports,
            });
            emit(out, &doc, |w| {
                writeln!(w, "alpha,width,bcr,cardinality,lbm,ubm")?;
                for r in &reports {
                    writeln!(
                        w,
                        "{},{},{},{},{},{}",
                        r.alpha,
                        r.width,
                        r.bcr,
                        r.cardinality,
                        r.lbm.join(" "),
                        r.ubm.join(" ")
                    )?;
                }
                Ok(())
            })
        }

        Command::Muc {
            data,
            selectors,
            tuning,
            boot,
            out,
        } => {
            check_b(boot.b)?;
            let ds = load(data)?;
            let labels = unique_labels(selectors, tuning);
            let mut curves = Vec::new();
            let mut crs = Vec::new();
            for (name, label) in selectors.iter().zip(&labels) {
                let spec = tuning.spec(*name, seed);
                let method = boot.method.resolve(spec.kind);
                let ens = build_ensemble(&ds, &spec, boot.b, method, seed)?;
                let muc = AlgorithmChoice::from(boot.algorithm).build(&ens)?;
                println!("{label}: AMUC {:.4} ({:?} search)", amuc(&muc), muc.algorithm);
                curves.push(json!({
                    "label": label,
                    "selector": spec,
                    "method": method,
                    "algorithm": muc.algorithm,
                    "amuc": amuc(&muc),
                    "points": muc_points(&muc)
                        .into_iter()
                        .enumerate()
                        .map(|(w, (x, cr))| json!({"w": w, "w_over_p": x, "cr": cr}))
                        .collect::<Vec<_>>(),
                }));
                crs.push(muc.cr);
            }
            let doc = json!({
                "config": {
                    "command": "muc",
                    "data": data.data,
                    "response": data.response,
                    "B": boot.b,
                    "seed": seed,
                    "threads": cli.threads,
                },
                "predictors": ds.names,
                "curves": curves,
            });
            match resolve_format(out) {
                Format::Json => emit(out, &doc, |_| Ok(())),
                Format::Csv => {
                    let dir = out
                        .output
                        .as_ref()
                        .ok_or_else(|| CliError::config("CSV curves need --output DIR"))?;
                    std::fs::create_dir_all(dir).map_err(|e| CliError::io(e.to_string()))?;
                    for (label, cr) in labels.iter().zip(&crs) {
                        let path = dir.join(format!("muc_{label}.csv"));
                        write_muc_csv(cr, create(&path)?)?;
                    }
                    Ok(())
                }
            }
        }

        Command::Vscs {
            data,
            alpha,
            dump_survivors,
            out,
        } => {
            check_alphas(alpha)?;
            let ds = load(data)?;
            let results = vscs_levels(&ds, alpha)?;
            let reports: Vec<VscsReport> = results
                .iter()
                .map(|r| VscsReport::new(r, &ds.names, *dump_survivors))
                .collect();
            for r in &reports {
                println!(
                    "{:.0}% VSCS: {} models, {} lower bound models",
                    100.0 * (1.0 - r.alpha),
                    r.cardinality,
                    r.lbms.len()
                );
                for l in &r.lbms {
                    println!("  LBM: {}", braces(l));
                }
            }
            let doc = json!({
                "config": {
                    "command": "vscs",
                    "data": data.data,
                    "response": data.response,
                    "alpha": alpha,
                },
                "n": ds.n(),
                "p": ds.p(),
                "predictors": ds.names,
                "reports": reports,
            });
            emit(out, &doc, |w| {
                writeln!(w, "alpha,cardinality,lbm_count,lbms")?;
                for r in &reports {
                    let lbms: Vec<String> = r.lbms.iter().map(|l| l.join(" ")).collect();
                    writeln!(
                        w,
                        "{},{},{},{}",
                        r.alpha,
                        r.cardinality,
                        r.lbms.len(),
                        lbms.join("|")
                    )?;
                }
                Ok(())
            })
        }

        Command::Simulate {
            config,
            out,
            muc_dir,
        } => {
            let designs = read_campaign(config, cli.seed)?;
            let mut reports = Vec::new();
            for d in &designs {
                let done = AtomicUsize::new(0);
                let step = (d.reps / 10).max(1);
                let report = run_coverage_experiment_with(d, |_| {
                    let k = done.fetch_add(1, Ordering::Relaxed) + 1;
                    if k.is_multiple_of(step) || k == d.reps {
                        eprintln!("{}: {k}/{} repetitions", d.name, d.reps);
                    }
                })?;
                for row in &report.rows {
                    println!(
                        "{} {:.0}% {}: coverage {:.3}, mean cardinality {:.2}",
                        d.name,
                        100.0 * row.confidence,
                        row.method,
                        row.coverage_rate,
                        row.mean_cardinality
                    );
                }
                if let Some(dir) = muc_dir {
                    std::fs::create_dir_all(dir).map_err(|e| CliError::io(e.to_string()))?;
                    let path = dir.join(format!("{}_muc.csv", d.name));
                    write_muc_csv(&report.mean_cr, create(&path)?)?;
                }
                reports.push(report);
            }
            let doc = json!({ "designs": reports });
            emit(out, &doc, |w| {
                write_coverage_csv(&reports, w).map_err(|e| std::io::Error::other(e.to_string()))
            })
        }

        Command::Compare {
            config,
            selectors,
            tuning,
            out,
        } => {
            let mut design: SimConfig = read_json(config)?;
            if let Some(s) = cli.seed {
                design.seed = s;
            }
            let labels = unique_labels(selectors, tuning);
            let specs: Vec<SelectorSpec> = selectors.iter().map(|s| tuning.spec(*s, 0)).collect();
            let mut report = compare_selectors(&design, &specs)?;
            for (c, l) in report.curves.iter_mut().zip(&labels) {
                c.label = l.clone();
            }
            for (rank, &i) in report.ranking.iter().enumerate() {
                let c = &report.curves[i];
                println!("{}. {}: AMUC {:.4}", rank + 1, c.label, c.amuc);
            }
            let doc = json!({ "config": design, "comparison": report });
            emit(out, &doc, |w| {
                writeln!(w, "rank,selector,amuc,mean_rep_amuc")?;
                for (rank, &i) in report.ranking.iter().enumerate() {
                    let c = &report.curves[i];
                    writeln!(w, "{},{},{},{}", rank + 1, c.label, c.amuc, c.mean_rep_amuc)?;
                }
                Ok(())
            })
        }
    }
}

fn load(args: &DataArgs) -> Result<Dataset> {
    let raw = read_csv(&args.data, &args.response)?;
    Ok(standardize(&raw)?.0)
}

fn check_alphas(alphas: &[f64]) -> Result<()> {
    match alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        Some(a) => Err(CliError::config(format!("alpha must lie in (0, 1), got {a}"))),
        None => Ok(()),
    }
}

fn check_b(b: usize) -> Result<()> {
    if b == 0 {
        Err(CliError::config("B must be at least 1"))
    } else {
        Ok(())
    }
}

fn braces(names: &[String]) -> String {
    format!("{{{}}}", names.join(", "))
}

/// Selector labels with a numeric suffix on repeats.
fn unique_labels(names: &[SelectorName], tuning: &TuningArgs) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for &n in names {
        let base = tuning.spec(n, 0).label();
        let seen = out
            .iter()
            .filter(|l| **l == base || l.starts_with(&format!("{base}_")))
            .count();
        out.push(if seen == 0 { base } else { format!("{base}_{}", seen + 1) });
    }
    out
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Campaign {
    Many { designs: Vec<SimConfig> },
    One(SimConfig),
}

fn read_campaign(path: &Path, seed: Option<u64>) -> Result<Vec<SimConfig>> {
    let mut designs = match read_json::<Campaign>(path)? {
        Campaign::Many { designs } => designs,
        Campaign::One(d) => vec![d],
    };
    if designs.is_empty() {
        return Err(CliError::config("campaign has no designs"));
    }
    for d in &mut designs {
        if let Some(s) = seed {
            d.seed = s;
        }
        d.validate()?;
    }
    Ok(designs)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

/// Explicit format, else inferred from the output extension.
fn resolve_format(out: &OutputArgs) -> Format {
    if let Some(f) = out.format {
        return f;
    }
    match out.output.as_ref().and_then(|p| p.extension()) {
        Some(ext) if ext == "csv" => Format::Csv,
        _ => Format::Json,
    }
}

/// Writes the report to `--output`, if given, in the resolved format.
fn emit<F>(out: &OutputArgs, doc: &Value, csv: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let Some(path) = &out.output else {
        return Ok(());
    };
    let mut w = create(path)?;
    let written = match resolve_format(out) {
        Format::Json => serde_json::to_writer_pretty(&mut w, doc)
            .map_err(std::io::Error::other)
            .and_then(|_| writeln!(w)),
        Format::Csv => csv(&mut w),
    };
    written
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}
