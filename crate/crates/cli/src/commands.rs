use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use resa::audit::{leadtime_experiment, probe_sweep, seed_noise_band, LeadtimeArch, LeadtimeMatrix, Verdict};
use resa::baselines::{raw_passthrough, BaselineState};
use resa::climnorm::climatology::encode as encode_climatology;
use resa::climnorm::{distribution_report, normalize_dynamic, normalize_static, NormKind};
use resa::eval::{bias_map, skill_csv, SkillOptions, SkillRecord};
use resa::experiment::{ablate_arch, ablate_norm, finetune_resa, train_acausal, train_resa, Benchmark, Runner};
use resa::grid::gridts::{decode as decode_gridts, encode as encode_gridts};
use resa::grid::synth::{lat_center, lon_center};
use resa::grid::{write_dataset, GridSeries, SynthDataset, MANIFEST_FILE};
use resa::model::{Architecture, ModelState};
use resa::train::{loss_curve_csv, TrainConfig, DEFAULT_FREEZE};

use crate::config::{resolve_threads, RunConfig};
use crate::record::Outputs;
use crate::source::{climatology, Checkpoint, Source};
use crate::{config_error, ArchArg, Cli, CliError, CliResult, Command, LeadtimeArg, NormArg};

struct Ctx {
    cfg: RunConfig,
    seed: u64,
    threads: usize,
    out: PathBuf,
}

impl Ctx {
    fn options(&self) -> SkillOptions {
        SkillOptions {
            area_weighted: self.cfg.area_weighted,
        }
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.cfg.experiment.train.clone()
        }
    }
}

fn check_inputs(paths: &[PathBuf]) -> CliResult<()> {
    match paths.iter().find(|p| !p.is_file()) {
        Some(p) => Err(config_error(format!("input {} does not exist", p.display()))),
        None => Ok(()),
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let g = &cli.global;
    let cfg = RunConfig::resolve(g)?;
    let threads = resolve_threads(g.threads)?;
    let seed = g.seed.or_else(|| cfg.experiment.seeds.first().copied()).unwrap_or(0);
    cfg.experiment.model.validate()?;
    cfg.experiment.train.validate()?;
    let ctx = Ctx {
        cfg,
        seed,
        threads,
        out: g.out.clone(),
    };
    let mut inputs: Vec<PathBuf> = g.config.iter().cloned().collect();
    let name = cli.command.name();
    let recorded_seed = match &cli.command {
        Command::Synth { .. } | Command::Plotdata { .. } | Command::Climatology { .. } | Command::Correct { .. } | Command::Evaluate { .. } | Command::Audit { .. } => g.seed,
        _ => Some(seed),
    };
    let out = match &cli.command {
        Command::Synth { variable, no_errors } => synth(&ctx, variable.as_deref(), *no_errors, g.seed, &inputs)?,
        Command::Climatology { data } => {
            let src = Source::open(data, &ctx.cfg, false)?;
            inputs.extend(src.inputs());
            check_inputs(&inputs)?;
            climatology_cmd(&ctx, &src, &inputs)?
        }
        Command::Train {
            data,
            norm,
            arch,
            leads,
            acausal_baseline,
        } => {
            let src = Source::open(data, &ctx.cfg, false)?;
            inputs.extend(src.inputs());
            check_inputs(&inputs)?;
            train_cmd(&ctx, &src, *norm, *arch, *leads, *acausal_baseline, &inputs)?
        }
        Command::Finetune {
            data,
            checkpoint,
            freeze,
            target_val_loss,
        } => {
            let src = Source::open(data, &ctx.cfg, true)?;
            inputs.push(checkpoint.clone());
            inputs.extend(src.inputs());
            check_inputs(&inputs)?;
            finetune_cmd(&ctx, &src, checkpoint, freeze.as_deref(), *target_val_loss, &inputs)?
        }
        Command::Correct { data, checkpoint, climatology } => {
            let src = Source::open(data, &ctx.cfg, false)?;
            inputs.push(checkpoint.clone());
            inputs.extend(climatology.iter().cloned());
            inputs.extend(src.inputs());
            check_inputs(&inputs)?;
            correct_cmd(&ctx, &src, checkpoint, climatology.as_ref(), &inputs)?
        }
        Command::Evaluate { data, checkpoint, climatology } => {
            let src = Source::open(data, &ctx.cfg, false)?;
            inputs.extend(checkpoint.iter().cloned());
            inputs.extend(climatology.iter().cloned());
            inputs.extend(src.inputs());
            check_inputs(&inputs)?;
            evaluate_cmd(&ctx, &src, checkpoint, climatology.as_ref(), &inputs)?
        }
        Command::AblateNorm { data } => {
            let src = Source::open(data, &ctx.cfg, false)?;
            inputs.extend(src.inputs());
            check_inputs(&inputs)?;
            ablate_norm_cmd(&ctx, &src, &inputs)?
        }
        Command::AblateLeadtime {
            data,
            horizons,
            arch,
            band_seed,
        } => {
            let src = Source::open(data, &ctx.cfg, false)?;
            inputs.extend(src.inputs());
            check_inputs(&inputs)?;
            ablate_leadtime_cmd(&ctx, &src, horizons, *arch, *band_seed, &inputs)?
        }
        Command::AblateArch { data, seeds } => {
            let src = Source::open(data, &ctx.cfg, false)?;
            inputs.extend(src.inputs());
            check_inputs(&inputs)?;
            ablate_arch_cmd(&ctx, &src, seeds.as_deref(), &inputs)?
        }
        Command::Audit {
            data,
            checkpoint,
            climatology,
            case,
            epsilon,
        } => {
            let src = Source::open(data, &ctx.cfg, false)?;
            inputs.extend(checkpoint.iter().cloned());
            inputs.extend(climatology.iter().cloned());
            inputs.extend(src.inputs());
            check_inputs(&inputs)?;
            return audit_cmd(&ctx, &src, checkpoint, climatology.as_ref(), *case, epsilon, &inputs, name, recorded_seed);
        }
        Command::Plotdata { from } => {
            if from.is_empty() {
                return Err(config_error("plotdata needs at least one --from directory"));
            }
            if let Some(d) = from.iter().find(|d| !d.is_dir()) {
                return Err(config_error(format!("{} is not a directory", d.display())));
            }
            plotdata_cmd(&ctx, from, &inputs)?
        }
    };
    out.finish(name, &ctx.cfg, recorded_seed, ctx.threads)
}

fn synth(ctx: &Ctx, variable: Option<&str>, no_errors: bool, seed: Option<u64>, inputs: &[PathBuf]) -> CliResult<Outputs> {
    let exp = &ctx.cfg.experiment;
    let mut bench = match variable {
        None => exp.benchmark.clone(),
        Some(v) if v == exp.benchmark.synth.variable => exp.benchmark.clone(),
        Some(v) if v == exp.transfer.synth.variable => exp.transfer.clone(),
        Some(v) => return Err(config_error(format!("no synthetic preset for variable {v:?}"))),
    };
    if let Some(s) = seed {
        bench.data_seed = s;
    }
    if no_errors {
        bench.synth = bench.synth.without_errors();
    }
    let mut out = Outputs::new(&ctx.out, inputs)?;
    out.check_writable(&[MANIFEST_FILE])?;
    let ds = SynthDataset::generate(bench.synth.clone(), bench.data_seed)?;
    let cases = ds.cases(&ds.schedule(bench.synth.init_stride_days))?;
    let manifest = write_dataset(&out.dir, ds.truth(), &cases, &bench.test_years)?;
    for f in &manifest.files {
        out.register(&f.path)?;
    }
    out.register(MANIFEST_FILE)?;
    out.write("synth_config.json", serde_json::to_string_pretty(&bench)? + "\n")?;
    let s = &bench.synth;
    out.line(format!(
        "synthetic {} {}×{} grid, {}–{}, {} leads, {} cases, data seed {}",
        s.variable,
        s.lat,
        s.lon,
        s.start_year,
        s.end_year,
        s.leads,
        cases.len(),
        bench.data_seed
    ));
    out.line(format!("test years {:?}", bench.test_years));
    Ok(out)
}

fn climatology_cmd(ctx: &Ctx, src: &Source, inputs: &[PathBuf]) -> CliResult<Outputs> {
    let bench = src.benchmark()?;
    let mut out = Outputs::new(&ctx.out, inputs)?;
    let clim = &bench.climatology;
    out.write("climatology.clm", encode_climatology(clim))?;
    let truth = &bench.train_truth;
    let (stat, mean, std) = normalize_static(truth)?;
    let dynamic = normalize_dynamic(truth, clim)?;
    out.write("distribution_raw.json", distribution_report(truth)?.to_json()?)?;
    out.write("distribution_static.json", distribution_report(&stat.series)?.to_json()?)?;
    out.write("distribution_dynamic.json", distribution_report(&dynamic.series)?.to_json()?)?;
    out.line(format!("climatology {} fitted on {} years, window {}", clim.id(), clim.fit_years().len(), clim.window()));
    out.line(format!("static statistics: mean {mean:.4}, std {std:.4}"));
    Ok(out)
}

fn skill_lines(out: &mut Outputs, records: &[SkillRecord]) {
    for r in records {
        out.line(format!(
            "  {:<18} lead {} rmse {:.4} acc {:.4} ({} cases)",
            r.model, r.lead_days, r.rmse, r.acc, r.n_cases
        ));
    }
}

fn write_model(out: &mut Outputs, state: &ModelState) -> CliResult<()> {
    out.write("model.resa", state.encode()?)?;
    out.write("loss_curve.csv", loss_curve_csv(&state.meta.training.loss_curve))?;
    Ok(())
}

fn train_cmd(ctx: &Ctx, src: &Source, norm: NormArg, arch: ArchArg, leads: Option<usize>, acausal: bool, inputs: &[PathBuf]) -> CliResult<Outputs> {
    let bench = src.benchmark()?;
    let mut out = Outputs::new(&ctx.out, inputs)?;
    let leads = leads.unwrap_or(bench.leads());
    let exp = &ctx.cfg.experiment;
    let kind: NormKind = norm.into();
    out.write("climatology.clm", encode_climatology(&bench.climatology))?;
    let (handle, record) = if acausal {
        let run = train_acausal(&bench, &exp.acausal, &ctx.train_config(), kind, leads, ctx.seed)?;
        out.write("model.basl", run.state.encode()?)?;
        let BaselineState::Acausal { training, .. } = &run.state else {
            unreachable!("acausal training returns the acausal baseline")
        };
        out.write("loss_curve.csv", loss_curve_csv(&training.loss_curve))?;
        (run.handle, training.clone())
    } else {
        let arch: Architecture = arch.into();
        let run = train_resa(&bench, &arch.configure(exp.model.clone()), &ctx.train_config(), kind, leads, ctx.seed)?;
        write_model(&mut out, &run.state)?;
        (run.handle, run.state.meta.training.clone())
    };
    let records = bench.evaluate(&[&raw_passthrough(), &handle], leads, ctx.options())?;
    out.write("skill.csv", skill_csv(&records))?;
    out.line(format!(
        "{} ({kind} normalization, {leads} leads) trained {} epochs on {} cases; best validation loss {:.6} at epoch {}",
        handle.model_id,
        record.epochs_run,
        bench.train.len(),
        record.best_val_loss,
        record.best_epoch
    ));
    skill_lines(&mut out, &records);
    Ok(out)
}

fn finetune_cmd(ctx: &Ctx, src: &Source, checkpoint: &Path, freeze: Option<&[String]>, target: Option<f64>, inputs: &[PathBuf]) -> CliResult<Outputs> {
    let Checkpoint::Resa(pre) = Checkpoint::load(checkpoint)? else {
        return Err(config_error("fine-tuning needs a ReSA model checkpoint"));
    };
    let bench = src.benchmark()?;
    let mut out = Outputs::new(&ctx.out, inputs)?;
    let freeze: Vec<String> = match freeze {
        None => DEFAULT_FREEZE.iter().map(|s| s.to_string()).collect(),
        Some([one]) if one == "none" => Vec::new(),
        Some(list) => list.to_vec(),
    };
    let cfg = TrainConfig {
        freeze,
        target_val_loss: target,
        ..ctx.train_config()
    };
    let run = finetune_resa(&bench, &pre, &cfg, ctx.seed)?;
    out.write("climatology.clm", encode_climatology(&bench.climatology))?;
    write_model(&mut out, &run.state)?;
    let records = bench.evaluate(&[&raw_passthrough(), &run.handle], bench.leads(), ctx.options())?;
    out.write("skill.csv", skill_csv(&records))?;
    let rec = &run.state.meta.training;
    out.write(
        "finetune.json",
        serde_json::to_string_pretty(&serde_json::json!({
            "source_variable": pre.meta.variable,
            "target_variable": bench.variable(),
            "frozen_groups": rec.frozen_groups,
            "target_val_loss": target,
            "epochs_to_target": run.epochs_to_target,
            "epochs_run": rec.epochs_run,
            "best_val_loss": rec.best_val_loss,
        }))? + "\n",
    )?;
    out.line(format!(
        "fine-tuned {} → {} with {:?} frozen: best validation loss {:.6}, epochs to target {:?}",
        pre.meta.variable,
        bench.variable(),
        rec.frozen_groups,
        rec.best_val_loss,
        run.epochs_to_target
    ));
    skill_lines(&mut out, &records);
    Ok(out)
}

fn correct_cmd(ctx: &Ctx, src: &Source, checkpoint: &Path, clim_path: Option<&PathBuf>, inputs: &[PathBuf]) -> CliResult<Outputs> {
    let ck = Checkpoint::load(checkpoint)?;
    let bench = src.benchmark()?;
    let clim = climatology(clim_path, &bench)?;
    let handle = ck.handle(clim)?;
    let (truth, cases, test_years) = src.all_cases()?;
    if !ck.grid_matches(truth.lat(), truth.lon()) {
        return Err(resa::Error::Dimension("checkpoint grid differs from the data".into()).into());
    }
    let mut out = Outputs::new(&ctx.out, inputs)?;
    out.check_writable(&[MANIFEST_FILE])?;
    let corrected = handle.correct_all(&cases)?;
    let manifest = write_dataset(&out.dir, &truth, &corrected, &test_years)?;
    for f in &manifest.files {
        out.register(&f.path)?;
    }
    out.register(MANIFEST_FILE)?;
    out.line(format!("corrected {} cases with {} into {}", corrected.len(), handle.model_id, out.dir.display()));
    Ok(out)
}

fn bias_series(bench: &Benchmark, map: Vec<f64>) -> CliResult<GridSeries> {
    let (lat, lon) = bench.grid();
    Ok(GridSeries::new(bench.variable(), vec![bench.test[0].init], lat, lon, map)?)
}

fn evaluate_cmd(ctx: &Ctx, src: &Source, checkpoints: &[PathBuf], clim_path: Option<&PathBuf>, inputs: &[PathBuf]) -> CliResult<Outputs> {
    let bench = src.benchmark()?;
    let clim = climatology(clim_path, &bench)?;
    let mut handles = vec![raw_passthrough()];
    for p in checkpoints {
        let ck = Checkpoint::load(p)?;
        let mut h = ck.handle(clim.clone())?;
        if handles.iter().any(|o| o.model_id == h.model_id) {
            h.model_id = format!("{}#{}", h.model_id, handles.len());
        }
        handles.push(h);
    }
    let mut out = Outputs::new(&ctx.out, inputs)?;
    let leads = bench.leads();
    let cases = bench.test_cases(leads);
    let mut runs = Vec::new();
    for h in &handles {
        let corrected = h.correct_all(&cases)?;
        let map = bias_map(&corrected)?;
        out.write(&format!("bias_{}.gts", h.model_id), encode_gridts(&bias_series(&bench, map)?))?;
        runs.push((h.model_id.clone(), corrected));
    }
    let records = resa::eval::skill_table(&runs, &clim, ctx.options())?;
    out.write("skill.csv", skill_csv(&records))?;
    out.line(format!(
        "evaluated {} correctors on {} month-start cases (area weighting {})",
        handles.len(),
        cases.len(),
        if ctx.cfg.area_weighted { "on" } else { "off" }
    ));
    skill_lines(&mut out, &records);
    Ok(out)
}

fn runner(ctx: &Ctx, src: &Source) -> CliResult<Runner> {
    Ok(Runner::with_benchmark(src.benchmark()?, ctx.cfg.experiment.clone()))
}

fn ablate_norm_cmd(ctx: &Ctx, src: &Source, inputs: &[PathBuf]) -> CliResult<Outputs> {
    let r = runner(ctx, src)?;
    let mut out = Outputs::new(&ctx.out, inputs)?;
    let a = ablate_norm(&r, ctx.seed)?;
    out.write("ablate_norm.csv", skill_csv(&a.records))?;
    out.write("ablate_norm.json", serde_json::to_string_pretty(&a)? + "\n")?;
    out.line(format!(
        "mean test RMSE over leads 4–7: static {:.4}, dynamic {:.4} ({:.1}% lower)",
        a.static_rmse,
        a.dynamic_rmse,
        100.0 * a.reduction
    ));
    skill_lines(&mut out, &a.records);
    Ok(out)
}

fn matrix_lines(out: &mut Outputs, m: &LeadtimeMatrix) {
    out.line(format!("{}: max cross-horizon difference {:.5}", m.architecture, m.max_pair_diff()));
    for p in &m.pairs {
        out.line(format!("  lead {} horizons {} vs {}: {:.5}", p.lead, p.horizon_a, p.horizon_b, p.abs_diff));
    }
}

fn ablate_leadtime_cmd(ctx: &Ctx, src: &Source, horizons: &[usize], arch: LeadtimeArg, band_seed: Option<u64>, inputs: &[PathBuf]) -> CliResult<Outputs> {
    let r = runner(ctx, src)?;
    let mut out = Outputs::new(&ctx.out, inputs)?;
    let archs = match arch {
        LeadtimeArg::Resa => vec![LeadtimeArch::Resa],
        LeadtimeArg::AcausalBaseline => vec![LeadtimeArch::AcausalBaseline],
        LeadtimeArg::Both => vec![LeadtimeArch::Resa, LeadtimeArch::AcausalBaseline],
    };
    let mut csv = String::new();
    let mut pairs = String::from("architecture,lead,horizon_a,horizon_b,abs_diff\n");
    let mut matrices = Vec::new();
    for a in archs {
        let m = leadtime_experiment(&r, a, horizons, ctx.seed)?;
        let body = m.to_csv();
        if csv.is_empty() {
            csv.push_str(&body);
        } else {
            csv.extend(body.lines().skip(1).map(|l| format!("{l}\n")));
        }
        for p in &m.pairs {
            pairs.push_str(&format!("{},{},{},{},{}\n", m.architecture, p.lead, p.horizon_a, p.horizon_b, p.abs_diff));
        }
        matrix_lines(&mut out, &m);
        matrices.push(m);
    }
    let horizon = horizons.iter().copied().max().unwrap_or(r.bench.leads());
    let second = band_seed.unwrap_or(ctx.seed + 1);
    let band = seed_noise_band(&r, horizon, (ctx.seed, second))?;
    out.write("leadtime.csv", csv)?;
    out.write("leadtime_pairs.csv", pairs)?;
    out.write(
        "leadtime.json",
        serde_json::to_string_pretty(&serde_json::json!({
            "matrices": matrices,
            "noise_band": band,
            "noise_band_horizon": horizon,
            "noise_band_seeds": [ctx.seed, second],
            "bound": 2.0 * band,
        }))? + "\n",
    )?;
    out.line(format!("seed-noise band at horizon {horizon}: {band:.5}; bound 2×band = {:.5}", 2.0 * band));
    for m in &matrices {
        let ok = m.max_pair_diff() <= 2.0 * band;
        out.line(format!("  {} {} the bound", m.architecture, if ok { "stays within" } else { "exceeds" }));
    }
    Ok(out)
}

fn ablate_arch_cmd(ctx: &Ctx, src: &Source, seeds: Option<&[u64]>, inputs: &[PathBuf]) -> CliResult<Outputs> {
    let mut r = runner(ctx, src)?;
    if let Some(s) = seeds {
        r.exp.seeds = s.to_vec();
    }
    let mut out = Outputs::new(&ctx.out, inputs)?;
    let a = ablate_arch(&r)?;
    out.write("ablate_arch.csv", skill_csv(&a.records))?;
    let mut summary = String::from("architecture,seeds,mean_rmse\n");
    for row in &a.rows {
        summary.push_str(&format!("{},{},{}\n", row.architecture, row.per_seed.len(), row.mean));
        out.line(format!("{:<18} mean test RMSE {:.5} over seeds {:?}", row.architecture, row.mean, a.seeds));
    }
    out.write("ablate_arch_summary.csv", summary)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn audit_cmd(
    ctx: &Ctx,
    src: &Source,
    checkpoints: &[PathBuf],
    clim_path: Option<&PathBuf>,
    case: usize,
    eps: &[f64],
    inputs: &[PathBuf],
    name: &str,
    seed: Option<u64>,
) -> CliResult<()> {
    if eps.iter().any(|e| *e == 0.0 || !e.is_finite()) {
        return Err(config_error("probe magnitudes must be finite and nonzero"));
    }
    let bench = src.benchmark()?;
    let clim = climatology(clim_path, &bench)?;
    let target = bench
        .test
        .get(case)
        .ok_or_else(|| config_error(format!("case {case} out of range: {} test cases", bench.test.len())))?;
    let mut out = Outputs::new(&ctx.out, inputs)?;
    let mut broken = Vec::new();
    for (k, p) in checkpoints.iter().enumerate() {
        let h = Checkpoint::load(p)?.handle(clim.clone())?;
        let reports = probe_sweep(&h, &target.truncated(bench.leads()), eps)?;
        let leaks = reports.iter().filter(|r| r.verdict == Verdict::Acausal).count();
        let verdict = if leaks == 0 { Verdict::Causal } else { Verdict::Acausal };
        out.write(
            &format!("probe_{k}_{}.json", h.model_id),
            serde_json::to_string_pretty(&serde_json::json!({
                "checkpoint": p.display().to_string(),
                "model_id": h.model_id,
                "causal_claim": h.causal_claim,
                "case_init": target.init.to_string(),
                "verdict": verdict,
                "probes": reports,
            }))? + "\n",
        )?;
        out.line(format!(
            "{} (claims {}): {}, {leaks} of {} probes leak",
            h.model_id,
            if h.causal_claim { "causal" } else { "acausal" },
            if verdict == Verdict::Causal { "CAUSAL" } else { "ACAUSAL" },
            reports.len()
        ));
        if h.causal_claim && leaks > 0 {
            broken.push(h.model_id.clone());
        }
    }
    out.finish(name, &ctx.cfg, seed, ctx.threads)?;
    if broken.is_empty() {
        Ok(())
    } else {
        Err(CliError::AuditFailed(format!("{broken:?} claim causality but leak future leads")))
    }
}

fn read_skill(path: &Path) -> CliResult<Vec<SkillRecord>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(resa::eval::SKILL_HEADER) {
        return Err(resa::Error::Format {
            offset: 0,
            message: format!("{} lacks the skill header", path.display()),
        }
        .into());
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            let bad = || -> CliError {
                resa::Error::Format {
                    offset: i as u64 + 1,
                    message: format!("{}: bad skill row {l:?}", path.display()),
                }
                .into()
            };
            if f.len() != 6 {
                return Err(bad());
            }
            Ok(SkillRecord {
                model: f[0].into(),
                variable: f[1].into(),
                lead_days: f[2].parse().map_err(|_| bad())?,
                rmse: f[3].parse().map_err(|_| bad())?,
                acc: f[4].parse().map_err(|_| bad())?,
                n_cases: f[5].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// Mean over repeated (model, variable, lead) rows, e.g. across seeds.
fn per_lead(records: &[SkillRecord], metric: fn(&SkillRecord) -> f64) -> BTreeMap<(String, usize), f64> {
    let mut acc: BTreeMap<(String, usize), (f64, usize)> = BTreeMap::new();
    for r in records {
        let e = acc.entry((r.model.clone(), r.lead_days)).or_default();
        e.0 += metric(r);
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

fn tidy(header: &str, rows: BTreeMap<(String, usize), f64>) -> String {
    let mut s = format!("{header}\n");
    for ((m, lead), v) in rows {
        s.push_str(&format!("{m},{lead},{v}\n"));
    }
    s
}

fn plotdata_cmd(ctx: &Ctx, dirs: &[PathBuf], inputs: &[PathBuf]) -> CliResult<Outputs> {
    let mut found: Vec<PathBuf> = inputs.to_vec();
    let mut skill = Vec::new();
    let mut norm = Vec::new();
    let mut arch = Vec::new();
    let mut leadtime: Option<String> = None;
    let mut bias: Vec<(String, GridSeries)> = Vec::new();
    for d in dirs {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(d)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
        entries.sort();
        for p in entries {
            let Some(name) = p.file_name().and_then(|n| n.to_str()).map(str::to_string) else { continue };
            match name.as_str() {
                "skill.csv" => skill.extend(read_skill(&p)?),
                "ablate_norm.csv" => norm.extend(read_skill(&p)?),
                "ablate_arch.csv" => arch.extend(read_skill(&p)?),
                "leadtime.csv" => {
                    let text = std::fs::read_to_string(&p)?;
                    match &mut leadtime {
                        None => leadtime = Some(text),
                        Some(acc) => acc.extend(text.lines().skip(1).map(|l| format!("{l}\n"))),
                    }
                }
                n if n.starts_with("bias_") && n.ends_with(".gts") => {
                    bias.push((n["bias_".len()..n.len() - 4].to_string(), decode_gridts(&std::fs::read(&p)?)?));
                }
                _ => continue,
            }
            found.push(p);
        }
    }
    if found.len() == inputs.len() {
        return Err(config_error("no evaluate or ablation outputs found"));
    }
    let mut out = Outputs::new(&ctx.out, &found)?;
    if !skill.is_empty() {
        out.write("fig2a_rmse.csv", tidy("model,lead_days,rmse", per_lead(&skill, |r| r.rmse)))?;
        out.write("fig2b_acc.csv", tidy("model,lead_days,acc", per_lead(&skill, |r| r.acc)))?;
        out.line(format!("fig2a/fig2b from {} skill rows", skill.len()));
    }
    if !bias.is_empty() {
        let mut s = String::from("model,lat,lon,bias\n");
        for (m, g) in &bias {
            for i in 0..g.lat() {
                for j in 0..g.lon() {
                    s.push_str(&format!("{m},{},{},{}\n", lat_center(i, g.lat()), lon_center(j, g.lon()), g.field(0)[i * g.lon() + j]));
                }
            }
        }
        out.write("fig2ef_bias.csv", s)?;
        out.line(format!("fig2e/f bias maps for {} models", bias.len()));
    }
    if !norm.is_empty() {
        out.write("fig4a_norm.csv", tidy("normalization,lead_days,rmse", per_lead(&norm, |r| r.rmse)))?;
        out.line("fig4a from ablate-norm");
    }
    if let Some(lt) = leadtime {
        out.write("fig4b_leadtime.csv", lt)?;
        out.line("fig4b from ablate-leadtime");
    }
    if !arch.is_empty() {
        out.write("fig4c_arch.csv", tidy("architecture,lead_days,rmse", per_lead(&arch, |r| r.rmse)))?;
        out.line("fig4c from ablate-arch (mean over seeds)");
    }
    Ok(out)
}
