//! `utilgasp`: fit, predict, classify and benchmark from the shell.

mod args;
mod config;

use std::fmt::Write as _;
use std::net::ToSocketAddrs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use utilgasp::derivatives::{classify_curvature, CurvatureOptions};
use utilgasp::domain::{format_f64, load_dataset, CsvSchema};
use utilgasp::experiments::{self, Estimator};
use utilgasp::gasp::{self, ModelDocument};
use utilgasp::{AttributeDomain, Dataset, FitConfig, FittedGasp, MeanBasis, NoiseModel, NuggetMode};

use args::{BenchArgs, Cli, Command, CurvatureArgs, DataArgs, FitArgs, HoldoutArgs, LooArgs, Noise, PredictArgs, ServeArgs, Ties};
use config::{announce, Failure, Outcome};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let file = cli.config.as_deref().map(config::load).transpose()?;
    let file = file.as_ref();
    let name = cli.command.name();
    match cli.command {
        Command::Fit(a) => fit(config::merge(a, file, name)?),
        Command::Predict(a) => predict(config::merge(a, file, name)?),
        Command::Curvature(a) => curvature(config::merge(a, file, name)?),
        Command::Bench(a) => bench(config::merge(a, file, name)?),
        Command::Holdout(a) => holdout(config::merge(a, file, name)?),
        Command::Loo(a) => loo(config::merge(a, file, name)?),
        Command::Serve(a) => serve(config::merge(a, file, name)?),
    }
}

fn required<T: Clone>(value: &Option<T>, flag: &str) -> Outcome<T> {
    value.clone().ok_or_else(|| Failure::usage(format!("--{flag} is required")))
}

fn fill_data(a: &mut DataArgs) {
    a.noise.get_or_insert(Noise::NoiseFree);
}

fn load_data(a: &DataArgs) -> Outcome<Dataset> {
    let path = required(&a.data, "data")?;
    let domain = match (&a.lower, &a.upper) {
        (Some(lo), Some(hi)) => Some(AttributeDomain::new(lo.clone(), hi.clone())?),
        (None, None) => None,
        _ => return Err(Failure::usage("--lower and --upper go together")),
    };
    let noise_model = a.noise.map_or(NoiseModel::NoiseFree, NoiseModel::from);
    load_dataset(&path, &CsvSchema { domain, noise_model }).map_err(|e| match e {
        utilgasp::Error::Io(io) => Failure::Runtime(format!("{}: {io}", path.display())),
        e => e.into(),
    })
}

fn load_model(path: &Path) -> Outcome<FittedGasp> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let doc: ModelDocument =
        serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    Ok(FittedGasp::from_document(&doc)?)
}

fn parse_estimators(names: &[String]) -> Outcome<Vec<Estimator>> {
    Ok(names.iter().map(|s| s.trim().parse()).collect::<utilgasp::Result<_>>()?)
}

/// Writes to `out`, creating parent directories, or to stdout.
fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn fit(mut a: FitArgs) -> Outcome {
    fill_data(&mut a.data);
    let basis = a.basis.get_or_insert_with(|| "const".into()).clone();
    announce("fit", &a);
    let data = load_data(&a.data)?;
    let p = data.domain().dim();
    let nugget = match data.noise_model() {
        NoiseModel::NoiseFree => NuggetMode::None,
        NoiseModel::Noisy => NuggetMode::Estimated,
    };
    let config = FitConfig::matern52(p, MeanBasis::parse(&basis, p)?).with_nugget(nugget);
    let model = gasp::fit(&data, &config)?;
    emit(a.out.as_deref(), &model.to_json()?)?;
    eprintln!(
        "gamma {:?} nugget {} sigma2 {} log posterior {}",
        model.gamma(),
        model.nugget(),
        model.sigma2(),
        model.log_posterior()
    );
    Ok(())
}

fn read_points(path: &Path, p: usize) -> Outcome<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let bad = |msg: String| Failure::usage(format!("{} row {}: {msg}", path.display(), i + 1));
        let record = record.map_err(|e| bad(e.to_string()))?;
        if record.len() != p {
            return Err(bad(format!("expected {p} fields, found {}", record.len())));
        }
        let x = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| bad(format!("{f:?}: {e}"))))
            .collect::<Outcome<Vec<f64>>>()?;
        points.push(x);
    }
    Ok(points)
}

fn predict(mut a: PredictArgs) -> Outcome {
    let model_path = required(&a.model, "model")?;
    if a.points.is_some() && a.grid.is_some() {
        return Err(Failure::usage("--grid and --points are exclusive"));
    }
    if a.points.is_none() {
        a.grid.get_or_insert(1001);
    }
    announce("predict", &a);
    let model = load_model(&model_path)?;
    let dom = model.dataset().domain();
    let p = dom.dim();
    let queries = match (&a.points, a.grid) {
        (Some(path), _) => read_points(path, p)?,
        (None, Some(m)) => {
            if p != 1 {
                return Err(Failure::usage("--grid needs a single-attribute model; use --points"));
            }
            if m < 2 {
                return Err(Failure::usage("--grid needs at least 2 points"));
            }
            experiments::equally_spaced(dom.lower()[0], dom.upper()[0], m).into_iter().map(|x| vec![x]).collect()
        }
        (None, None) => unreachable!("grid has a default"),
    };
    let preds = model.predict_grid(&queries)?;
    let mut out = String::new();
    let names: Vec<String> = if p == 1 { vec!["x".into()] } else { (1..=p).map(|l| format!("x{l}")).collect() };
    let _ = writeln!(out, "{},mean,lo95,hi95", names.join(","));
    for (x, t) in queries.iter().zip(&preds) {
        let (lo, hi) = t.interval(0.95);
        let xs: Vec<String> = x.iter().map(|&v| format_f64(v)).collect();
        let _ = writeln!(out, "{},{},{},{}", xs.join(","), format_f64(t.location), format_f64(lo), format_f64(hi));
    }
    emit(a.out.as_deref(), &out)
}

fn curvature(mut a: CurvatureArgs) -> Outcome {
    let model_path = required(&a.model, "model")?;
    let grid = *a.grid.get_or_insert(1000);
    let options = CurvatureOptions {
        threshold: *a.threshold.get_or_insert(2.0 / 3.0),
        tie_rule: (*a.ties.get_or_insert(Ties::CountConvex)).into(),
    };
    announce("curvature", &a);
    let model = load_model(&model_path)?;
    let report = classify_curvature(&model, grid, options)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::Runtime(e.to_string()))?;
    emit(a.out.as_deref(), &(json + "\n"))
}

fn bench(mut a: BenchArgs) -> Outcome {
    let table = required(&a.table, "table")?;
    let seed = *a.seed.get_or_insert(0);
    let out = a.out.get_or_insert_with(|| PathBuf::from("results")).clone();
    announce("bench", &a);
    let configs = experiments::table_configs(table, seed, a.replicates)?;
    if let Some(spec) = &a.cell {
        let parts: Vec<&str> = spec.split(':').collect();
        let [est, parameter, n] = parts[..] else {
            return Err(Failure::usage(format!("--cell expects ESTIMATOR:PARAMETER:N, got '{spec}'")));
        };
        let estimator: Estimator = est.parse()?;
        let n: usize = n.parse().map_err(|_| Failure::usage(format!("--cell: bad n '{n}'")))?;
        let config = configs
            .iter()
            .find(|c| c.truth.label() == parameter && c.n_interior == n && c.estimators.contains(&estimator))
            .ok_or_else(|| Failure::usage(format!("table {table} has no cell {spec}")))?;
        let cell = experiments::run_cell(config, estimator)?;
        let json = serde_json::to_string(&cell).map_err(|e| Failure::Runtime(e.to_string()))?;
        println!("{json}");
        return Ok(());
    }
    let result = experiments::run_benchmark(&format!("table{table}"), &configs)?;
    result.write(&out)?;
    eprintln!("wrote {}", out.join(format!("{}.csv", result.name)).display());
    Ok(())
}

fn holdout(mut a: HoldoutArgs) -> Outcome {
    fill_data(&mut a.data);
    let n_test = *a.test.get_or_insert(1);
    let replicates = *a.replicates.get_or_insert(100);
    let seed = *a.seed.get_or_insert(0);
    let names = a.estimators.get_or_insert_with(|| ["GaSP", "LI", "Exp", "Pow", "QPD"].map(String::from).to_vec()).clone();
    let basis = a.basis.get_or_insert_with(|| "const".into()).clone();
    let name = a.name.get_or_insert_with(|| "holdout".into()).clone();
    let out = a.out.get_or_insert_with(|| PathBuf::from("results")).clone();
    announce("holdout", &a);
    let estimators = parse_estimators(&names)?;
    let data = load_data(&a.data)?;
    let basis = MeanBasis::parse(&basis, data.domain().dim())?;
    let table = experiments::run_holdout(&name, &data, n_test, replicates, seed, &estimators, &basis)?;
    table.write(&out)?;
    print!("{}", table.to_csv());
    Ok(())
}

fn loo(mut a: LooArgs) -> Outcome {
    fill_data(&mut a.data);
    let names = a.estimators.get_or_insert_with(|| ["GaSP", "RandMAU", "Mean"].map(String::from).to_vec()).clone();
    let basis = a.basis.get_or_insert_with(|| "const".into()).clone();
    let name = a.name.get_or_insert_with(|| "loo".into()).clone();
    let out = a.out.get_or_insert_with(|| PathBuf::from("results")).clone();
    announce("loo", &a);
    let estimators = parse_estimators(&names)?;
    let data = load_data(&a.data)?;
    let basis = MeanBasis::parse(&basis, data.domain().dim())?;
    let table = experiments::run_loo(&name, &data, &estimators, a.subset.as_deref(), &basis)?;
    table.write(&out)?;
    print!("{}", table.to_csv());
    Ok(())
}

fn serve(mut a: ServeArgs) -> Outcome {
    let host = a.host.get_or_insert_with(|| "127.0.0.1".into()).clone();
    let port = *a.port.get_or_insert(8080);
    announce("serve", &a);
    let addr = (host.as_str(), port)
        .to_socket_addrs()
        .map_err(|e| Failure::usage(format!("{host}:{port}: {e}")))?
        .next()
        .ok_or_else(|| Failure::usage(format!("{host} does not resolve")))?;
    let state = match &a.persist {
        Some(dir) => utilgasp_service::AppState::with_persistence(dir)?,
        None => utilgasp_service::AppState::new(),
    };
    let runtime = tokio::runtime::Runtime::new()?;
    eprintln!("listening on http://{addr}");
    runtime.block_on(utilgasp_service::serve(addr, state))?;
    Ok(())
}
