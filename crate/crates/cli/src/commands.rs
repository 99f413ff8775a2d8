use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, ValueEnum};
use hcbits::bitgen::{
    build_disagreement_table, build_response_matrix, sample_brief_pool, sample_lbp_pool, BitPool, DisagreementTable,
    LbpParams, ResponseMatrix, DEFAULT_BRIEF_POOL_SIZE, DEFAULT_LBP_POOL_SIZE, DEFAULT_MARGIN, DEFAULT_SIGMA,
};
use hcbits::dataset::{generate_synthetic_pairset, load_brown_subset, Label, PairSet};
use hcbits::eval::{evaluate_descriptor, mean_std, report_csv, ReportRow};
use hcbits::retrieval::{
    index_images, load_database, results_csv, summary_line, synthetic_database, write_database, MatchTable,
    DEFAULT_FAST_THRESHOLD, DEFAULT_MAX_KEYPOINTS,
};
use hcbits::selection::{
    select_boosting, select_correlation, select_hill_climb, select_random, Descriptor, PairDistanceState,
    SelectionTrace, TraceEntry,
};
use hcbits::{Error, Result};

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PoolKindArg {
    Brief,
    Lbp,
}

#[derive(Args, Debug)]
pub struct GenPoolArgs {
    #[arg(long, value_enum, default_value = "brief")]
    kind: PoolKindArg,
    /// Pool size (default 1024 for brief, 4096 for lbp).
    #[arg(long = "B", visible_alias = "size")]
    size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Minimum distance of brief test points from the patch border.
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    margin: usize,
    /// Gaussian smoothing applied before brief comparisons.
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    sigma: f64,
    #[arg(long, default_value_t = LbpParams::default().threshold)]
    lbp_threshold: f64,
    /// LBP cells per side.
    #[arg(long, default_value_t = LbpParams::default().grid)]
    grid: usize,
    /// Output file (default `<out-dir>/pool.txt`).
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn gen_pool(a: GenPoolArgs, out_dir: &Path) -> Result<()> {
    let pool = match a.kind {
        PoolKindArg::Brief => sample_brief_pool(a.seed, a.size.unwrap_or(DEFAULT_BRIEF_POOL_SIZE), a.margin, a.sigma)?,
        PoolKindArg::Lbp => {
            let params = LbpParams {
                threshold: a.lbp_threshold,
                grid: a.grid,
            };
            sample_lbp_pool(a.seed, a.size.unwrap_or(DEFAULT_LBP_POOL_SIZE), params)?
        }
    };
    let path = a.out.unwrap_or_else(|| out_dir.join("pool.txt"));
    write_file(&path, pool.to_text())?;
    println!("wrote {} bits to {}", pool.len(), path.display());
    Ok(())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Labeled patch pairs in the pair-set container format.
    Pairs,
    /// PNG images plus a `manifest.txt` for `retrieve`.
    Images,
}

#[derive(Args, Debug)]
pub struct GenSynthArgs {
    #[arg(long, value_enum, default_value = "pairs")]
    kind: SynthKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    classes: usize,
    #[arg(long, default_value_t = 8)]
    per_class: usize,
    /// Probability that a member patch resamples each pixel of its class base.
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 10)]
    groups: usize,
    #[arg(long, default_value_t = 4)]
    per_group: usize,
    /// Amplitude of the uniform per-pixel noise added to database images.
    #[arg(long, default_value_t = 8)]
    pixel_noise: u8,
    /// Output file for pairs, directory for images.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn gen_synth(a: GenSynthArgs, out_dir: &Path) -> Result<()> {
    match a.kind {
        SynthKind::Pairs => {
            let set = generate_synthetic_pairset(a.seed, a.classes, a.per_class, a.noise)?;
            let path = a.out.unwrap_or_else(|| out_dir.join(format!("synth-{}.pairset", a.seed)));
            write_file(&path, set.to_bytes())?;
            println!(
                "wrote {} patches and {} pairs to {}",
                set.patches().len(),
                set.pairs().len(),
                path.display()
            );
        }
        SynthKind::Images => {
            let db = synthetic_database(a.seed, a.groups, a.per_group, a.pixel_noise)?;
            let dir = a.out.unwrap_or_else(|| out_dir.join(format!("synth-db-{}", a.seed)));
            let manifest = write_database(&db, &dir)?;
            println!("wrote {} images; manifest {}", db.len(), manifest.display());
        }
    }
    Ok(())
}

/// Where labeled pairs come from: a pair-set container or a Brown subset.
#[derive(Args, Debug)]
#[group(id = "source", required = true, multiple = true)]
pub struct PairSource {
    /// Pair-set container file.
    #[arg(long, conflicts_with_all = ["brown_dir", "pair_file"])]
    pairset: Option<PathBuf>,
    /// Brown subset directory (info.txt, patchesNNNN.bmp, pair files).
    #[arg(long, requires = "pair_file")]
    brown_dir: Option<PathBuf>,
    /// Pair file inside the Brown directory, e.g. m50_100000_100000_0.txt.
    #[arg(long, requires = "brown_dir")]
    pair_file: Option<String>,
}

impl PairSource {
    fn load(&self) -> Result<PairSet> {
        match (&self.pairset, &self.brown_dir, &self.pair_file) {
            (Some(p), _, _) => PairSet::read(p),
            (None, Some(dir), Some(file)) => {
                let mut set = load_brown_subset(dir, file)?.pairs;
                if let Some(name) = dir.file_name() {
                    set.set_name(name.to_string_lossy());
                }
                Ok(set)
            }
            _ => Err(Error::Usage("give either --pairset or --brown-dir with --pair-file".into())),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Hillclimb,
    Boost,
    Corr,
    Random,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Hillclimb => "hillclimb",
            Method::Boost => "boost",
            Method::Corr => "corr",
            Method::Random => "random",
        }
    }

    fn is_seeded(self) -> bool {
        matches!(self, Method::Hillclimb | Method::Random)
    }
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    /// Pool file written by gen-pool.
    #[arg(long)]
    pool: PathBuf,
    #[command(flatten)]
    train: PairSource,
    #[arg(long, value_enum, default_value = "hillclimb")]
    method: Method,
    /// Descriptor length.
    #[arg(long, default_value_t = 256)]
    b: usize,
    /// Hill-climb iterations (default 4 x pool size).
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    shrinkage: f64,
    /// Correlation threshold of the corr method.
    #[arg(long, default_value_t = 0.2)]
    tau: f64,
    /// Seed of run 0; run r uses seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent runs of seeded methods (deterministic methods run once).
    #[arg(long, default_value_t = 10)]
    runs: usize,
}

struct TrainingData {
    responses: ResponseMatrix,
    table: DisagreementTable,
    labels: Vec<Label>,
}

fn build_caches(pool: &BitPool, set: &PairSet) -> Result<TrainingData> {
    let responses = build_response_matrix(pool, set.patches())?;
    let table = build_disagreement_table(&responses, set.pairs())?;
    Ok(TrainingData {
        responses,
        table,
        labels: set.labels(),
    })
}

fn run_method(data: &TrainingData, method: Method, a: &SelectionParams, seed: u64) -> Result<(Descriptor, SelectionTrace)> {
    let descriptor = match method {
        Method::Hillclimb => return select_hill_climb(&data.table, &data.labels, a.b, a.iters, seed),
        Method::Boost => select_boosting(&data.table, &data.labels, a.b, a.shrinkage)?,
        Method::Corr => select_correlation(&data.table, &data.responses, &data.labels, a.b, a.tau)?,
        Method::Random => select_random(data.table.num_bits(), a.b, seed)?,
    };
    let auc = PairDistanceState::from_scratch(&data.table, &data.labels, descriptor.selected())
        .auc_ratio()
        .value();
    let trace = SelectionTrace {
        entries: vec![TraceEntry {
            iteration: 0,
            auc,
            accepted: true,
        }],
    };
    Ok((descriptor, trace))
}

struct SelectionParams {
    b: usize,
    iters: Option<usize>,
    shrinkage: f64,
    tau: f64,
}

pub fn select(a: SelectArgs, out_dir: &Path) -> Result<()> {
    if a.runs == 0 {
        return Err(Error::Param("--runs must be at least 1".into()));
    }
    let pool = BitPool::read(&a.pool)?;
    let set = a.train.load()?;
    let data = build_caches(&pool, &set)?;
    let params = SelectionParams {
        b: a.b,
        iters: a.iters,
        shrinkage: a.shrinkage,
        tau: a.tau,
    };
    let runs = if a.method.is_seeded() { a.runs } else { 1 };
    let pool_ref = a.pool.display().to_string();
    let name = a.method.name();
    let mut summary = String::from("run,seed,train_auc\n");
    for r in 0..runs {
        let seed = a.seed.wrapping_add(r as u64);
        let (descriptor, trace) = run_method(&data, a.method, &params, seed)?;
        let auc = trace.final_auc().expect("trace has the initial entry");
        let desc_path = out_dir.join(format!("{name}-run{r}.desc"));
        write_file(&desc_path, descriptor.to_text(&pool_ref)?)?;
        write_file(&out_dir.join(format!("{name}-run{r}.trace.csv")), trace.to_csv())?;
        summary.push_str(&format!("{r},{seed},{auc}\n"));
        println!("run {r}: seed {seed}, training auc {auc}, descriptor {}", desc_path.display());
    }
    write_file(&out_dir.join(format!("{name}-runs.csv")), summary)?;
    Ok(())
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Descriptor files; each one is reported as a separate run.
    #[arg(long = "descriptor", required = true, num_args = 1..)]
    descriptors: Vec<PathBuf>,
    /// Pool file (default: the pool recorded in the first descriptor).
    #[arg(long)]
    pool: Option<PathBuf>,
    #[command(flatten)]
    test: PairSource,
    /// Method label for the report (default: descriptor file name up to `-run`).
    #[arg(long)]
    method: Option<String>,
    /// Training set label for the report.
    #[arg(long, default_value = "unknown")]
    train_name: String,
}

fn method_label(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    match stem.rfind("-run") {
        Some(i) => stem[..i].to_string(),
        None => stem,
    }
}

pub fn eval(a: EvalArgs, out_dir: &Path) -> Result<()> {
    let loaded = a
        .descriptors
        .iter()
        .map(|p| Descriptor::read(p))
        .collect::<Result<Vec<_>>>()?;
    let pool_path = a.pool.clone().unwrap_or_else(|| PathBuf::from(&loaded[0].0));
    let pool = BitPool::read(&pool_path)?;
    let test = a.test.load()?;
    let method = a.method.clone().unwrap_or_else(|| method_label(&a.descriptors[0]));

    let mut rows = Vec::new();
    for (run, (_, descriptor)) in loaded.iter().enumerate() {
        let report = evaluate_descriptor(descriptor, &pool, &test)?;
        write_file(&out_dir.join(format!("{method}-curve-run{run}.csv")), report.curve.to_csv())?;
        rows.push(ReportRow {
            method: method.clone(),
            train: a.train_name.clone(),
            test: test.name().to_string(),
            run,
            auc: report.auc,
            fpr95: report.fpr95,
        });
    }
    let report_path = out_dir.join(format!("{method}-report.csv"));
    write_file(&report_path, report_csv(&rows)?)?;
    let (auc_m, auc_s) = mean_std(&rows.iter().map(|r| r.auc).collect::<Vec<_>>());
    let (fpr_m, fpr_s) = mean_std(&rows.iter().map(|r| r.fpr95).collect::<Vec<_>>());
    println!(
        "{method} on {}: auc {auc_m:.6} +- {auc_s:.6}, fpr95 {:.2}% +- {:.2}% over {} run(s); report {}",
        test.name(),
        100.0 * fpr_m,
        100.0 * fpr_s,
        rows.len(),
        report_path.display()
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct RetrieveArgs {
    /// Database manifest with one `path group_id` line per image.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    descriptor: PathBuf,
    /// Pool file (default: the pool recorded in the descriptor).
    #[arg(long)]
    pool: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Fixed Hamming threshold for a keypoint match.
    #[arg(long, conflicts_with = "tune")]
    threshold: Option<u32>,
    /// Sweep every threshold and keep the best one (the default without --threshold).
    #[arg(long)]
    tune: bool,
    #[arg(long, default_value_t = DEFAULT_FAST_THRESHOLD)]
    fast_threshold: u8,
    #[arg(long, default_value_t = DEFAULT_MAX_KEYPOINTS)]
    max_keypoints: usize,
    /// Results CSV (default `<out-dir>/retrieval.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn retrieve(a: RetrieveArgs, out_dir: &Path) -> Result<()> {
    let (pool_ref, descriptor) = Descriptor::read(&a.descriptor)?;
    let pool = BitPool::read(&a.pool.unwrap_or_else(|| PathBuf::from(pool_ref)))?;
    if a.k == 0 {
        return Err(Error::Param("--k must be at least 1".into()));
    }
    let images = load_database(&a.manifest)?;
    let index = index_images(&images, &descriptor, &pool, a.fast_threshold, a.max_keypoints)?;
    let table = MatchTable::build(&index)?;
    let (threshold, precision) = match a.threshold {
        Some(t) => (t, table.precision_at_k(a.k, t)?),
        None => table.tune_threshold(a.k)?,
    };
    let out = a.out.unwrap_or_else(|| out_dir.join("retrieval.csv"));
    write_file(&out, results_csv(&table, a.k, threshold)?)?;
    let summary = summary_line(a.k, precision, threshold);
    write_file(&out.with_extension("summary.txt"), format!("{summary}\n"))?;
    println!("{summary}");
    Ok(())
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Approximate number of synthetic training pairs.
    #[arg(long, default_value_t = 10_000)]
    num_pairs: usize,
    #[arg(long = "B", visible_alias = "size", default_value_t = DEFAULT_BRIEF_POOL_SIZE)]
    size: usize,
    #[arg(long, default_value_t = 256)]
    b: usize,
    /// Hill-climb iterations (default 4 x pool size).
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, value_enum, default_value = "hillclimb")]
    method: Method,
    #[arg(long, default_value_t = 0.5)]
    shrinkage: f64,
    #[arg(long, default_value_t = 0.2)]
    tau: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Synthetic classes of 8 patches give 28 matching and 28 non-matching pairs each.
const BENCH_PER_CLASS: usize = 8;

pub fn bench(a: BenchArgs) -> Result<()> {
    let per_class_pairs = BENCH_PER_CLASS * (BENCH_PER_CLASS - 1);
    let classes = a.num_pairs.div_ceil(per_class_pairs).max(2);
    let set = generate_synthetic_pairset(a.seed, classes, BENCH_PER_CLASS, 0.1)?;
    let pool = sample_brief_pool(a.seed, a.size, DEFAULT_MARGIN, DEFAULT_SIGMA)?;
    println!(
        "bench: {} pairs, {} patches, B = {}, b = {}, method {}",
        set.pairs().len(),
        set.patches().len(),
        pool.len(),
        a.b,
        a.method.name()
    );

    let start = Instant::now();
    let data = build_caches(&pool, &set)?;
    let cache_secs = start.elapsed().as_secs_f64();

    let params = SelectionParams {
        b: a.b,
        iters: a.iters,
        shrinkage: a.shrinkage,
        tau: a.tau,
    };
    let start = Instant::now();
    let (_, trace) = run_method(&data, a.method, &params, a.seed)?;
    let select_secs = start.elapsed().as_secs_f64();

    println!("cache_construction_seconds,{cache_secs:.6}");
    println!("selection_seconds,{select_secs:.6}");
    println!("training_auc,{}", trace.final_auc().expect("trace has the initial entry"));
    Ok(())
}
