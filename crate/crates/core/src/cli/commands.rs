use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Cli, Command, RunConfig};
use crate::cgan::{generate, train_cgan, Cgan};
use crate::datastore::{DataType, SpectrumRecord, Store};
use crate::detector::{evaluate, train_detector, Detector, DetectorSample};
use crate::error::{Error, Result};
use crate::metrics::{export_mesh, quality_report, table5_header, table5_row};
use crate::simulator::make_dataset;
use crate::spectrum::{detect_peaks, peak_stats, ConditionLabel, PeakOptions, Spectrum};

/// Offset that separates the validation simulation seed from the training one.
const VALIDATION_SEED_OFFSET: u64 = 1_000_003;

struct Run {
    out: PathBuf,
    artifacts: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    artifacts: &'a [String],
}

impl Run {
    fn new(out: &Path) -> Result<Self> {
        fs::create_dir_all(out)?;
        Ok(Self {
            out: out.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> Result<PathBuf> {
        let p = self.out.join(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir)?;
        }
        if !self.artifacts.iter().any(|a| a == name) {
            self.artifacts.push(name.to_string());
        }
        Ok(p)
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let p = self.path(name)?;
        fs::write(p, contents)?;
        Ok(())
    }

    fn finish(mut self, command: &str) -> Result<()> {
        self.artifacts.push("manifest.json".into());
        self.artifacts.sort();
        let m = Manifest {
            command,
            artifacts: &self.artifacts,
        };
        fs::write(self.out.join("manifest.json"), serde_json::to_string_pretty(&m)? + "\n")?;
        Ok(())
    }
}

pub(super) fn dispatch(cli: &Cli, mut cfg: RunConfig) -> Result<()> {
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    match &cli.command {
        Command::Simulate {
            n,
            length,
            interference,
        } => {
            if let Some(n) = n {
                cfg.simulate.n_per_condition = *n;
            }
            if let Some(t) = length {
                cfg.simulate.length = *t;
            }
            if let Some(i) = interference {
                cfg.simulate.interference = i.parse().map_err(|e: Error| Error::config(e.to_string()))?;
            }
        }
        Command::TrainGan {
            iterations,
            lr_g,
            lr_d,
            batch,
            lambda,
            checkpoint_every,
        } => {
            let t = &mut cfg.gan.train;
            iterations.inspect(|v| t.iterations = *v);
            lr_g.inspect(|v| t.lr_g = *v);
            lr_d.inspect(|v| t.lr_d = *v);
            batch.inspect(|v| t.batch = *v);
            lambda.inspect(|v| t.lambda = *v);
            checkpoint_every.inspect(|v| t.checkpoint_every = *v);
        }
        Command::TrainDetector { ladder: Some(l) } => cfg.ladder = l.clone(),
        _ => {}
    }
    let cfg = cfg.resolve()?;
    let mut run = Run::new(&cli.out)?;
    run.write("config.json", &(serde_json::to_string_pretty(&cfg)? + "\n"))?;

    match &cli.command {
        Command::Simulate { .. } => simulate(&cfg, &cli.db, &mut run)?,
        Command::Eda { data_type } => eda(&cli.db, data_type.parse()?, &mut run)?,
        Command::TrainGan { .. } => train_gan(&cfg, &cli.db, &mut run)?,
        Command::Generate { n, condition, model } => {
            let model = model.clone().unwrap_or_else(|| cli.out.join("gan.json"));
            generate_cmd(&cfg, &cli.db, *n, condition.as_deref(), &model, &mut run)?
        }
        Command::TrainDetector { .. } => train_detector_cmd(&cfg, &cli.db, &mut run)?,
        Command::Evaluate { against, detector } => {
            evaluate_cmd(&cfg, &cli.db, against.parse()?, detector.as_deref(), &mut run)?
        }
        Command::ExportMesh { id } => {
            let store = Store::open(&cli.db)?;
            let rec = store
                .get(*id)
                .ok_or_else(|| Error::Query(format!("no record with id {id}")))?;
            let spectrum = store.load_spectrum(rec)?;
            let name = format!("mesh_{id}.csv");
            export_mesh(&spectrum, &run.path(&name)?)?;
        }
    }
    run.finish(cli.command.name())
}

fn mask_name(file_name: &str) -> String {
    format!("{}.mask.json", file_name.strip_suffix(".json").unwrap_or(file_name))
}

fn validation_set(cfg: &RunConfig, length: usize) -> Result<Vec<DetectorSample>> {
    let conds = ConditionLabel::evaluation_conditions();
    let seed = cfg.seed.wrapping_add(VALIDATION_SEED_OFFSET);
    Ok(make_dataset(cfg.validation_per_condition, &conds, &cfg.simulate.model(), length, seed)?
        .iter()
        .map(DetectorSample::from_simulated)
        .collect())
}

fn load_set(store: &Store, data_type: DataType) -> Result<Vec<(SpectrumRecord, Spectrum)>> {
    store
        .all()
        .iter()
        .filter(|r| r.data_type == data_type)
        .map(|r| Ok((r.clone(), store.load_spectrum(r)?)))
        .collect()
}

/// Stored ground-truth mask when the simulator wrote one, else detected peaks.
fn load_samples(store: &Store, data_type: DataType) -> Result<Vec<DetectorSample>> {
    load_set(store, data_type)?
        .into_iter()
        .map(|(rec, spectrum)| {
            let mut sample = DetectorSample::from_spectrum(&spectrum)?;
            let mask_path = store.root().join(mask_name(&rec.file_name));
            if mask_path.is_file() {
                sample.mask = serde_json::from_str(&fs::read_to_string(mask_path)?)?;
            }
            Ok(sample)
        })
        .collect()
}

fn simulate(cfg: &RunConfig, db: &Path, run: &mut Run) -> Result<()> {
    let s = &cfg.simulate;
    let conds = ConditionLabel::evaluation_conditions();
    let records = make_dataset(s.n_per_condition, &conds, &s.model(), s.length, cfg.seed)?;
    let mut store = Store::open(db)?;
    let mut listing = String::from("id,condition,file_name\n");
    for rec in &records {
        let file = format!("real/{:06}.json", store.len() + 1);
        fs::create_dir_all(store.root().join("real"))?;
        fs::write(store.root().join(mask_name(&file)), serde_json::to_string(&rec.truth.mask)?)?;
        let id = store.insert_spectrum(DataType::Real, &rec.spectrum, &file)?;
        listing.push_str(&format!("{id},\"{}\",{file}\n", rec.label()));
    }
    run.write("simulated.csv", &listing)
}

fn eda(db: &Path, data_type: DataType, run: &mut Run) -> Result<()> {
    let store = Store::open(db)?;
    let mut groups: BTreeMap<String, Vec<[f64; 3]>> = BTreeMap::new();
    for (rec, s) in load_set(&store, data_type)? {
        let peaks = detect_peaks(&s.tic, &PeakOptions::for_length(s.tic.len()));
        let st = peak_stats(&s.tic, &peaks);
        let key = s.condition.as_ref().map_or(rec.condition, ToString::to_string);
        groups
            .entry(key)
            .or_default()
            .push([st.total_peak_area, st.mean_intensity, st.std_intensity]);
    }
    let mut csv = String::from("condition,records,total_peak_area,mean_intensity,std_intensity\n");
    for (cond, rows) in &groups {
        let n = rows.len() as f64;
        let m = |k: usize| rows.iter().map(|r| r[k]).sum::<f64>() / n;
        csv.push_str(&format!("\"{cond}\",{},{:.6},{:.6},{:.6}\n", rows.len(), m(0), m(1), m(2)));
    }
    run.write("eda.csv", &csv)
}

fn train_gan(cfg: &RunConfig, db: &Path, run: &mut Run) -> Result<()> {
    let store = Store::open(db)?;
    let real: Vec<Spectrum> = load_set(&store, DataType::Real)?.into_iter().map(|(_, s)| s).collect();
    let first = real
        .first()
        .ok_or_else(|| Error::data("the store holds no real records to train on"))?;
    let mut gan = cfg.gan.clone();
    gan.generator.output_dim = first.tic.len();
    let ck_dir = if gan.train.checkpoint_every > 0 {
        let d = run.out.join("checkpoints");
        fs::create_dir_all(&d)?;
        Some(d)
    } else {
        None
    };
    let outcome = train_cgan(&real, &gan, ck_dir.as_deref())?;
    if let Some(dir) = &ck_dir {
        let mut names: Vec<String> = fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .map(|e| format!("checkpoints/{}", e.file_name().to_string_lossy()))
            .collect();
        names.sort();
        run.artifacts.extend(names);
    }
    run.write("losses.csv", &outcome.history.to_csv())?;
    outcome.model.save(&run.path("gan.json")?)
}

fn generate_cmd(
    cfg: &RunConfig,
    db: &Path,
    n: usize,
    condition: Option<&str>,
    model: &Path,
    run: &mut Run,
) -> Result<()> {
    if n == 0 {
        return Err(Error::config("--n must be positive"));
    }
    let gan = Cgan::load(model)?;
    let conds = match condition {
        Some(c) => vec![c.parse::<ConditionLabel>().map_err(|e| Error::config(e.to_string()))?],
        None => ConditionLabel::evaluation_conditions(),
    };
    let mut store = Store::open(db)?;
    fs::create_dir_all(store.root().join("synthetic"))?;
    let mut listing = String::from("id,condition,file_name\n");
    for (i, label) in conds.iter().enumerate() {
        for s in generate(&gan.generator, label, n, cfg.seed.wrapping_add(i as u64)) {
            let file = format!("synthetic/{:06}.json", store.len() + 1);
            let id = store.insert_spectrum(DataType::Synthetic, &s, &file)?;
            listing.push_str(&format!("{id},\"{label}\",{file}\n"));
        }
    }
    run.write("generated.csv", &listing)
}

fn train_detector_cmd(cfg: &RunConfig, db: &Path, run: &mut Run) -> Result<()> {
    let store = Store::open(db)?;
    let real = load_samples(&store, DataType::Real)?;
    let mut synthetic = load_samples(&store, DataType::Synthetic)?;
    let length = real
        .first()
        .map(|s| s.spectrum.tic.len())
        .ok_or_else(|| Error::data("the store holds no real records"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(5);
    synthetic.shuffle(&mut rng);
    let validation = validation_set(cfg, length)?;

    let steps: Vec<usize> = if cfg.ladder.is_empty() { vec![synthetic.len()] } else { cfg.ladder.clone() };
    let mut table = table5_header() + "\n";
    let mut hist = String::from("synthetic,epoch,gc_loss,ms_loss,loss,accuracy,macro_f1\n");
    let mut last = None;
    for &k in &steps {
        if k > synthetic.len() {
            return Err(Error::data(format!(
                "ladder step {k} needs {k} synthetic records, the store has {}",
                synthetic.len()
            )));
        }
        let mut train = real.clone();
        train.extend_from_slice(&synthetic[..k]);
        let out = train_detector(&train, Some(&validation), &cfg.detector, &cfg.detector_train)?;
        for m in &out.history {
            hist.push_str(&format!(
                "{k},{},{},{},{},{},{}\n",
                m.epoch, m.gc_loss, m.ms_loss, m.loss, m.scores.accuracy, m.scores.macro_f1
            ));
        }
        let scores = &out.history.last().expect("at least one epoch").scores;
        table.push_str(&(table5_row(k, scores) + "\n"));
        last = Some(out.model);
    }
    run.write("table5.csv", &table)?;
    run.write("detector_history.csv", &hist)?;
    last.expect("at least one step").save(&run.path("detector.json")?)
}

fn evaluate_cmd(cfg: &RunConfig, db: &Path, against: DataType, detector: Option<&Path>, run: &mut Run) -> Result<()> {
    let store = Store::open(db)?;
    let real: Vec<Spectrum> = load_set(&store, DataType::Real)?.into_iter().map(|(_, s)| s).collect();
    let other: Vec<Spectrum> = if against == DataType::Real {
        real.clone()
    } else {
        load_set(&store, against)?.into_iter().map(|(_, s)| s).collect()
    };
    let report = quality_report(&real, &other, &|_| None)?;
    run.write("table4_conditions.csv", &report.conditions_csv())?;
    run.write("table4_ms.csv", &report.ms_csv())?;
    if let Some(path) = detector {
        let det = Detector::load(path)?;
        let length = real
            .first()
            .map(|s| s.tic.len())
            .ok_or_else(|| Error::data("the store holds no real records"))?;
        let scores = evaluate(&det, &validation_set(cfg, length)?)?;
        run.write("table5.csv", &format!("{}\n{}\n", table5_header(), table5_row(store.len(), &scores)))?;
    }
    Ok(())
}
