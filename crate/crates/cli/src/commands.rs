use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dlgn::checkpoint::Checkpoint;
use dlgn::circuit::{export_netlist, import_netlist, pack, simplify, DiscreteCircuit};
use dlgn::config::RunConfig;
use dlgn::data::Dataset;
use dlgn::init::InitScheme;
use dlgn::network::{build_network, Parametrization};
use dlgn::neuron::EstimatorKind;
use dlgn::train::{
    concentration_samples, discretization_gap, evaluate_continuous, gate_output_histogram,
    grad_norm_profile, histogram_csv, ConcentrationSummary, EncodedSet, RunMetrics, Trainer,
};
use dlgn::{DlgnError, GateId, Result};

use crate::{CircuitArgs, Cli, Command, DiagnoseArgs, Diagnostic, EvalArgs, Split};

pub const CONFIG_ECHO: &str = "config.txt";
pub const METRICS: &str = "metrics.csv";
pub const FINAL_CHECKPOINT: &str = "checkpoint.bin";

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train { resume } => train(cli, resume.as_deref()),
        Command::Eval(args) => eval(cli, args),
        Command::Discretize(args) => {
            let (report, _) = harden(cli, args)?;
            print!("{report}");
            let out = out_dir(cli, None)?;
            fs::write(out.join("discretize_report.txt"), report)?;
            Ok(())
        }
        Command::Export { circuit, output } => {
            let (report, c) = harden(cli, circuit)?;
            print!("{report}");
            let path = match output {
                Some(p) => p.clone(),
                None => out_dir(cli, None)?.join("circuit.netlist"),
            };
            fs::write(&path, export_netlist(&c))?;
            println!("netlist written to {}", path.display());
            Ok(())
        }
        Command::Diagnose(args) => diagnose(cli, args),
    }
}

/// `--config` (or defaults) with the global overrides applied.
fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    apply_overrides(cli, &mut cfg)?;
    Ok(cfg)
}

fn apply_overrides(cli: &Cli, cfg: &mut RunConfig) -> Result<()> {
    if let Some(s) = cli.seed {
        cfg.set("seed", &s.to_string())?;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    Ok(())
}

/// The config stored in a checkpoint, unless `--config` is given.
fn checkpoint_config(cli: &Cli, ck: &Checkpoint) -> Result<RunConfig> {
    if cli.config.is_some() {
        return load_config(cli);
    }
    let mut cfg = RunConfig::parse(&ck.config_text)?;
    apply_overrides(cli, &mut cfg)?;
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&RunConfig>) -> Result<PathBuf> {
    let dir = match (&cli.out, cfg) {
        (Some(o), _) => o.clone(),
        (None, Some(c)) => c.out.clone(),
        (None, None) => PathBuf::from("out"),
    };
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Datasets of `cfg`, with the dataset optionally replaced by `flag`.
fn datasets(cfg: &RunConfig, flag: Option<&str>) -> Result<(Dataset, Dataset)> {
    match flag {
        Some(s) => RunConfig {
            dataset: s.parse()?,
            ..cfg.clone()
        }
        .load_datasets(),
        None => cfg.load_datasets(),
    }
}

fn split_of(train: &Dataset, test: &Dataset, split: Split) -> Result<Dataset> {
    match split {
        Split::Train => Ok(train.clone()),
        Split::Test => Ok(test.clone()),
        Split::All => train.concat(test),
    }
}

fn train(cli: &Cli, resume: Option<&Path>) -> Result<()> {
    let (cfg, resumed) = match resume {
        Some(path) => {
            let ck = Checkpoint::load(path)?;
            let cfg = checkpoint_config(cli, &ck)?;
            if ck.network.parametrization() != cfg.parametrization {
                return Err(DlgnError::Checkpoint(format!(
                    "checkpoint holds a {} network but the config asks for {}",
                    ck.network.parametrization(),
                    cfg.parametrization
                )));
            }
            (cfg, Some(ck))
        }
        None => (load_config(cli)?, None),
    };
    let out = out_dir(cli, Some(&cfg))?;
    let echo = cfg.to_text();
    fs::write(out.join(CONFIG_ECHO), &echo)?;
    let (train_set, test_set) = cfg.load_datasets()?;
    let train_cfg = cfg.train_config();
    let step = resumed.as_ref().map_or(0, |ck| ck.step);
    let mut trainer = match resumed {
        Some(ck) => Trainer::resume(
            ck.network, ck.adam, ck.step, train_cfg, &train_set, &test_set,
        )?,
        None => {
            let net = build_network(
                &cfg.network_config(train_set.width(), train_set.classes)?,
                cfg.seed,
            )?;
            Trainer::new(net, train_cfg, &train_set, &test_set)?
        }
    };
    let metrics_path = out.join(METRICS);
    let layers = trainer.network().layers().len();
    let mut log = if step > 0 && metrics_path.exists() {
        fs::read_to_string(&metrics_path)?
    } else {
        format!("{}\n", RunMetrics::csv_header(layers))
    };
    let save = |t: &Trainer, path: &Path| -> Result<()> {
        Checkpoint {
            config_text: echo.clone(),
            seed: cfg.seed,
            step: t.step_count(),
            network: t.network().clone(),
            adam: t.adam().clone(),
        }
        .save(path)
    };
    let metrics = trainer.run(|t, p| {
        log.push_str(&RunMetrics::csv_row(p));
        log.push('\n');
        fs::write(&metrics_path, &log)?;
        save(t, &out.join(format!("checkpoint_{}.bin", p.step)))?;
        eprintln!(
            "step {:>7}  loss {:.5}  train {:.4}  disc {:.4}{}",
            p.step,
            p.loss,
            p.train_accuracy,
            p.train_discrete_accuracy,
            p.test_discrete_accuracy
                .map(|a| format!("  test disc {a:.4}"))
                .unwrap_or_default()
        );
        Ok(())
    })?;
    save(&trainer, &out.join(FINAL_CHECKPOINT))?;
    if let Some(p) = metrics.last() {
        println!(
            "final step {}: loss {} train_acc {} train_disc_acc {}",
            p.step, p.loss, p.train_accuracy, p.train_discrete_accuracy
        );
    }
    Ok(())
}

fn eval(cli: &Cli, args: &EvalArgs) -> Result<()> {
    let (cfg, ck) = match &args.checkpoint {
        Some(p) => {
            let ck = Checkpoint::load(p)?;
            (checkpoint_config(cli, &ck)?, Some(ck))
        }
        None => (load_config(cli)?, None),
    };
    let (train_set, test_set) = datasets(&cfg, args.dataset.as_deref())?;
    let data = split_of(&train_set, &test_set, args.split)?;
    if data.is_empty() {
        return Err(DlgnError::Dataset(
            "cannot evaluate on an empty dataset".into(),
        ));
    }
    let (circuit, set) = match &ck {
        Some(ck) => {
            let net = &ck.network;
            if net.input_width() != net.encoder().thresholds * data.width() {
                return Err(DlgnError::Dataset(format!(
                    "dataset width {} does not match the network's {} features",
                    data.width(),
                    net.encoder().input_dim
                )));
            }
            let set = EncodedSet::new(net, &data)?;
            let (acc, loss) = evaluate_continuous(net, &set)?;
            println!("continuous_accuracy {acc}");
            println!("continuous_loss {loss}");
            (net.discretize()?, set)
        }
        None => {
            let path = args.netlist.as_ref().expect("clap enforces one source");
            let circuit = import_netlist(&fs::read_to_string(path)?)?;
            (circuit.clone(), encode_for_circuit(&circuit, &data)?)
        }
    };
    let bits = set.bit_rows();
    let scores: Vec<Vec<u32>> = if args.packed {
        let packed = pack(&circuit);
        let start = Instant::now();
        let s = packed.eval(&bits)?;
        let secs = start.elapsed().as_secs_f64();
        println!(
            "packed_rows_per_second {:.0}",
            bits.len() as f64 / secs.max(1e-9)
        );
        s
    } else {
        bits.iter()
            .map(|b| circuit.eval(b).map(|(s, _)| s))
            .collect::<Result<_>>()?
    };
    let correct = scores
        .iter()
        .zip(&set.labels)
        .filter(|(s, &l)| dlgn::circuit::argmax_u32(s) == l)
        .count();
    println!("rows {}", set.len());
    println!("discrete_accuracy {}", correct as f64 / set.len() as f64);
    Ok(())
}

/// Thermometer-encodes a dataset for a netlist whose input count must be a
/// multiple of the feature width.
fn encode_for_circuit(circuit: &DiscreteCircuit, data: &Dataset) -> Result<EncodedSet> {
    let w = data.width();
    if w == 0 || !circuit.input_width().is_multiple_of(w) {
        return Err(DlgnError::Dataset(format!(
            "netlist has {} inputs, not a multiple of the dataset width {w}",
            circuit.input_width()
        )));
    }
    if data.classes > circuit.classes() {
        return Err(DlgnError::Dataset(format!(
            "dataset has {} classes but the netlist has {}",
            data.classes,
            circuit.classes()
        )));
    }
    let enc = dlgn::network::EncoderConfig::new(circuit.input_width() / w, w)?;
    Ok(EncodedSet {
        rows: enc.encode(&data.features)?,
        labels: data.labels.clone(),
    })
}

fn gate_table(before: &[usize; 16], after: Option<&[usize; 16]>) -> String {
    let mut s = String::from("gate,mnemonic,before");
    if after.is_some() {
        s.push_str(",after");
    }
    s.push('\n');
    for g in GateId::all() {
        let _ = write!(s, "{},{},{}", g.id(), g.mnemonic(), before[g.index()]);
        if let Some(a) = after {
            let _ = write!(s, ",{}", a[g.index()]);
        }
        s.push('\n');
    }
    s
}

fn harden(_cli: &Cli, args: &CircuitArgs) -> Result<(String, DiscreteCircuit)> {
    let ck = Checkpoint::load(&args.checkpoint)?;
    let raw = ck.network.discretize()?;
    let mut report = format!("nodes_before {}\n", raw.node_count());
    let (circuit, after) = if args.simplify {
        let s = simplify(&raw);
        let _ = writeln!(report, "nodes_after {}", s.node_count());
        let h = s.gate_histogram();
        (s, Some(h))
    } else {
        (raw.clone(), None)
    };
    report.push_str(&gate_table(&raw.gate_histogram(), after.as_ref()));
    Ok((report, circuit))
}

/// Schemes sampled by the `concentration` diagnostic.
fn concentration_schemes() -> Vec<(&'static str, InitScheme, Parametrization)> {
    vec![
        (
            "op_gaussian_sigma1",
            InitScheme::gaussian(1.0),
            Parametrization::Op,
        ),
        (
            "op_gaussian_sigma4",
            InitScheme::gaussian(4.0),
            Parametrization::Op,
        ),
        ("op_residual", InitScheme::residual(), Parametrization::Op),
        (
            "iwp_gaussian",
            InitScheme::gaussian(1.0),
            Parametrization::Iwp,
        ),
        ("iwp_residual", InitScheme::residual(), Parametrization::Iwp),
    ]
}

fn diagnose(cli: &Cli, args: &DiagnoseArgs) -> Result<()> {
    let needs_checkpoint = args.which.iter().any(|d| *d != Diagnostic::Concentration);
    let ck = match &args.checkpoint {
        Some(p) => Some(Checkpoint::load(p)?),
        None if needs_checkpoint => {
            return Err(DlgnError::Config(
                "--checkpoint is required for this diagnostic".into(),
            ))
        }
        None => None,
    };
    let cfg = match &ck {
        Some(ck) => checkpoint_config(cli, ck)?,
        None => load_config(cli)?,
    };
    let out = out_dir(cli, Some(&cfg))?;
    let data = match &ck {
        Some(ck) => {
            let (train, test) = datasets(&cfg, args.dataset.as_deref())?;
            if ck.network.encoder().input_dim != train.width() {
                return Err(DlgnError::Dataset(format!(
                    "checkpoint expects {} features, dataset has {}",
                    ck.network.encoder().input_dim,
                    train.width()
                )));
            }
            Some((train, test))
        }
        None => None,
    };
    for which in &args.which {
        let (name, csv) = match which {
            Diagnostic::Gradnorms => {
                let (net, (train, _)) = (&ck.as_ref().unwrap().network, data.as_ref().unwrap());
                let set = EncodedSet::new(net, train)?;
                let n = cfg.train.effective_batch().min(set.len());
                let idx: Vec<usize> = (0..n).collect();
                let profile =
                    grad_norm_profile(net, &set.rows.select_rows(&idx), &set.labels[..n])?;
                let mut s = String::from("layer,input_grad_norm,output_grad_norm,local_gain\n");
                for l in 0..profile.input_grad_norms.len() {
                    let _ = writeln!(
                        s,
                        "{},{:e},{:e},{}",
                        l + 1,
                        profile.input_grad_norms[l],
                        profile.output_grad_norms[l],
                        profile.local_gains[l]
                    );
                }
                ("gradnorms.csv", s)
            }
            Diagnostic::Histograms => {
                let (net, (train, _)) = (&ck.as_ref().unwrap().network, data.as_ref().unwrap());
                let set = EncodedSet::new(net, train)?;
                let layers: Vec<usize> = if args.layers.is_empty() {
                    (1..=net.layers().len()).collect()
                } else {
                    args.layers.clone()
                };
                let hists = layers
                    .iter()
                    .map(|&l| Ok((l, gate_output_histogram(net, &set.rows, l)?)))
                    .collect::<Result<Vec<_>>>()?;
                ("histograms.csv", histogram_csv(&hists))
            }
            Diagnostic::Gap => {
                let (net, (train, test)) = (&ck.as_ref().unwrap().network, data.as_ref().unwrap());
                let mut s = String::from("split,continuous_acc,discrete_acc,gap\n");
                for (split, d) in [("train", train), ("test", test)] {
                    if d.is_empty() {
                        continue;
                    }
                    let g = discretization_gap(net, d)?;
                    let _ = writeln!(
                        s,
                        "{split},{},{},{}",
                        g.continuous_accuracy, g.discrete_accuracy, g.gap
                    );
                }
                ("gap.csv", s)
            }
            Diagnostic::Concentration => {
                let mut s = String::from("scheme,median_abs,q1,q3,iqr\n");
                let mut samples_csv = String::from("scheme,index,d_p\n");
                for (label, scheme, param) in concentration_schemes() {
                    let xs = concentration_samples(
                        &scheme,
                        param,
                        EstimatorKind::Sin01,
                        args.samples,
                        cfg.seed,
                    )?;
                    let c = ConcentrationSummary::of(&xs);
                    let _ = writeln!(s, "{label},{},{},{},{}", c.median_abs, c.q1, c.q3, c.iqr);
                    for (i, x) in xs.iter().enumerate() {
                        let _ = writeln!(samples_csv, "{label},{i},{x:e}");
                    }
                }
                fs::write(out.join("concentration_samples.csv"), samples_csv)?;
                ("concentration.csv", s)
            }
        };
        let path = out.join(name);
        fs::write(&path, csv)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
