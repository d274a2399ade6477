use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use fgo_core::bo::{Components, ModelWeights, Needs, Preset};
use fgo_core::channels::RgbImage;
use fgo_core::eval::{
    evaluate, generate_synthetic_stimulus, load_ground_truth, make_split, read_manifest, read_signed_map,
    score_ground_truth, tune as tune_weights, write_signed_map, Alpha, EvalReport, LoadedImage, ManifestEntry,
    PreparedImage, StimulusKind, SynthParams,
};
use fgo_core::export::{correctness_image, direction_image, write_final_maps};
use fgo_core::grid::{read_label_map, write_label_map};
use fgo_core::{exec, LabelMap};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Split {
    All,
    Train,
    Test,
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create_out(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    Ok(&cfg.out)
}

/// `(contours, segments)` when both are configured.
fn load_labels(cfg: &RunConfig) -> Result<Option<(LabelMap, LabelMap)>> {
    match (&cfg.contours, &cfg.segments) {
        (Some(c), Some(s)) => Ok(Some((read_label_map(c)?, read_label_map(s)?))),
        (None, None) => Ok(None),
        _ => {
            log::warn!("T-junctions need both contour and segment maps; ignoring the one given");
            Ok(None)
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let image_path = cfg.image.as_ref().ok_or_else(|| anyhow!("run needs --image"))?;
    let image = RgbImage::read_ppm(image_path)?;
    let labels = load_labels(cfg)?;
    let mut w = cfg.weights;
    if labels.is_none() && w.alpha_tj > 0.0 {
        log::warn!("alphaTJ = {} without label maps; T-junction weight moved onto alphaRef", w.alpha_tj);
        w = w.without_tj();
    }
    let gts = cfg
        .ground_truth
        .iter()
        .map(|p| read_signed_map(p).map(|m| load_ground_truth(&m)))
        .collect::<fgo_core::Result<Vec<_>>>()?;

    let params = cfg.model_params();
    let label_refs = labels.as_ref().map(|(c, s)| (c, s));
    let comps = Components::compute(&image, label_refs, &params, w.w_opp, Needs::for_weights(&w))?;
    let finals = comps.final_maps(&w)?;
    log::info!("{} T-junctions detected", comps.junctions.len());

    let out = create_out(cfg)?;
    write_final_maps(out, &finals)?;
    direction_image(&finals).write_pgm(out.join("direction.pgm"))?;
    let mut report = format!("image={}\nweights={w}\njunctions={}\n", image_path.display(), comps.junctions.len());
    for (k, gt) in gts.iter().enumerate() {
        let name = if k == 0 { "correctness.pgm".to_string() } else { format!("correctness_{}.pgm", k + 1) };
        correctness_image(&finals, gt, cfg.radius)?.write_pgm(out.join(&name))?;
        let score = score_ground_truth(&finals, gt, cfg.radius)?;
        let acc = score.accuracy().map_or("nan".into(), |a| a.to_string());
        let _ = writeln!(report, "gt{}.fgca={acc}\ngt{}.pixels={}\ngt{}.ties={}", k + 1, k + 1, score.total(), k + 1, score.ties);
        println!("ground truth {}: FGCA {acc} over {} pixels", k + 1, score.total());
    }
    write(&out.join("run.txt"), &report)?;
    write(&out.join("config.txt"), &cfg.to_text())?;
    Ok(())
}

/// Manifest entries in the requested split, in manifest order.
fn select(cfg: &RunConfig, split: Split) -> Result<Vec<ManifestEntry>> {
    let manifest = cfg.manifest.as_ref().ok_or_else(|| anyhow!("a dataset command needs --manifest"))?;
    let entries = read_manifest(manifest)?;
    if split == Split::All {
        return Ok(entries);
    }
    let ids: Vec<String> = entries.iter().map(|e| e.id.clone()).collect();
    let s = make_split(&ids, cfg.seed)?;
    let keep = if split == Split::Train { s.train } else { s.test };
    Ok(entries.into_iter().filter(|e| keep.contains(&e.id)).collect())
}

/// Loads and filters every entry, skipping (and logging) failures.
fn prepare(cfg: &RunConfig, entries: &[ManifestEntry], needs: Needs) -> Result<(Vec<PreparedImage>, usize)> {
    let params = cfg.model_params();
    let results = exec::map_slice(entries, |e| {
        LoadedImage::load(e).and_then(|img| PreparedImage::new(&img, &params, cfg.weights.w_opp, needs, cfg.radius))
    });
    let mut prepared = Vec::new();
    let mut failed = 0;
    for (e, r) in entries.iter().zip(results) {
        match r {
            Ok(p) => prepared.push(p),
            Err(err) => {
                log::error!("{}: {err}", e.id);
                failed += 1;
            }
        }
    }
    if prepared.is_empty() {
        bail!("no usable images ({failed} failed)");
    }
    Ok((prepared, failed))
}

fn union(a: Needs, b: Needs) -> Needs {
    Needs {
        features: std::array::from_fn(|k| a.features[k] || b.features[k]),
        sa: a.sa || b.sa,
        tj: a.tj || b.tj,
    }
}

/// Preset alphas over the configured feature weights and `w_opp`.
fn preset_weights(cfg: &RunConfig, name: &str) -> Result<ModelWeights> {
    let p: Preset = name.parse()?;
    let w = p.weights();
    Ok(ModelWeights {
        alpha_ref: w.alpha_ref,
        alpha_sa: w.alpha_sa,
        alpha_tj: w.alpha_tj,
        ..cfg.weights
    })
}

pub fn eval(cfg: &RunConfig, compare: Option<&str>, split: Split) -> Result<()> {
    let runs: Vec<(String, ModelWeights)> = match compare {
        Some(pair) => {
            let names: Vec<&str> = pair.split(',').map(str::trim).collect();
            let [a, b] = names[..] else {
                bail!("--compare takes two presets, got {pair:?}");
            };
            vec![(a.to_string(), preset_weights(cfg, a)?), (b.to_string(), preset_weights(cfg, b)?)]
        }
        None => vec![("model".to_string(), cfg.weights)],
    };
    let needs = runs.iter().map(|(_, w)| Needs::for_weights(w)).reduce(union).expect("at least one run");
    let entries = select(cfg, split)?;
    let (prepared, failed) = prepare(cfg, &entries, needs)?;
    let mut reports: Vec<(String, EvalReport)> = runs
        .iter()
        .map(|(label, w)| Ok((label.clone(), evaluate(&prepared, w, cfg.radius)?)))
        .collect::<Result<_>>()?;
    if let [(_, base), (_, cand)] = &mut reports[..] {
        cand.compare(base)?;
    }
    let out = create_out(cfg)?;
    for (label, r) in &reports {
        print!("{}", r.to_text(label));
        let mut text = r.to_key_values(label);
        let _ = writeln!(text, "skipped={failed}");
        write(&out.join(format!("eval_{label}.txt")), &text)?;
    }
    if let [(a, _), (b, cand)] = &reports[..] {
        let p = cand.p_value.expect("compared above");
        println!("{b} beats {a}: right-tailed p = {p:.6e}");
        write(&out.join("comparison.txt"), &format!("baseline={a}\ncandidate={b}\np_value={p}\n"))?;
    }
    Ok(())
}

pub fn tune(cfg: &RunConfig, free: &str, split: Split) -> Result<()> {
    let free: Vec<Alpha> = free.split(',').map(str::parse).collect::<fgo_core::Result<_>>()?;
    let needs = Needs {
        sa: free.contains(&Alpha::Sa),
        tj: free.contains(&Alpha::Tj),
        ..Needs::for_weights(&cfg.weights)
    };
    let entries = select(cfg, split)?;
    let (prepared, failed) = prepare(cfg, &entries, needs)?;
    log::info!("tuning {free:?} on {} images ({failed} skipped)", prepared.len());
    let res = tune_weights(&prepared, &free, &cfg.weights, &cfg.search, cfg.radius)?;

    let out = create_out(cfg)?;
    let [r, s, t] = res.alphas;
    write(
        &out.join("tuned_weights.txt"),
        &format!(
            "alphaRef={r}\nalphaSA={s}\nalphaTJ={t}\n# objective={}\n# stop={:?}\n# final_step={}\n# images={}\n",
            res.objective,
            res.stop,
            res.final_step,
            prepared.len()
        ),
    )?;
    let mut trace = String::from("round step alphaRef alphaSA alphaTJ objective\n");
    for p in &res.trace {
        let [a, b, c] = p.alphas;
        let _ = writeln!(trace, "{} {} {a} {b} {c} {}", p.round, p.step, p.objective);
    }
    write(&out.join("trace.txt"), &trace)?;
    println!("alphaRef={r} alphaSA={s} alphaTJ={t} objective={} ({:?})", res.objective, res.stop);
    Ok(())
}

pub fn synth(cfg: &RunConfig, kind: &str, p: &SynthParams, name: Option<&str>) -> Result<()> {
    let kind: StimulusKind = kind.parse()?;
    let s = generate_synthetic_stimulus(kind, p)?;
    let out = create_out(cfg)?;
    let stem = name.unwrap_or(kind.name());
    s.image.write_ppm(out.join(format!("{stem}.ppm")))?;
    write_signed_map(out.join(format!("{stem}.sm1")), &s.signed)?;
    write_label_map(out.join(format!("{stem}_contours.lm1")), &s.contours)?;
    write_label_map(out.join(format!("{stem}_segments.lm1")), &s.segments)?;
    println!("{}", out.join(stem).display());
    Ok(())
}
