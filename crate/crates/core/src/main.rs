use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use etdm::image::{MorphRecipe, Tier};
use etdm::net::{HeadMode, IdentityAlign, NetworkConfig, NetworkWeights};
use etdm::pipeline::{
    degrade_sequence, read_frames, run_sequence, write_frames, ConfigFile, DumpObserver, LossNorm, PipelineConfig,
    RefinerKind, SequenceReport, DEFAULT_SCALE, DEFAULT_SIGMA,
};
use etdm::{Error, Result};

#[derive(Parser)]
#[command(name = "etdm", version, about = "Recurrent video super-resolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Super-resolve a directory of LR frames.
    Run(RunArgs),
    /// Blur and downscale HR frames into LR frames.
    Degrade(DegradeArgs),
    /// Write a freshly initialized weight file.
    InitWeights(InitArgs),
}

#[derive(Args, Default)]
struct NetArgs {
    #[arg(long)]
    branch_channels: Option<usize>,
    #[arg(long)]
    branch_blocks: Option<usize>,
    #[arg(long)]
    trunk_blocks: Option<usize>,
    #[arg(long)]
    refine_channels: Option<usize>,
    #[arg(long)]
    refine_blocks: Option<usize>,
    #[arg(long)]
    hv_dilation: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// HR ground truth; enables metrics, losses and oracle heads.
    #[arg(long)]
    hr: Option<PathBuf>,
    /// key=value file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scale: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Buffer size N; 0 disables refinement.
    #[arg(long)]
    buffer: Option<usize>,
    /// Future steps available before a frame is emitted (default N).
    #[arg(long)]
    lookahead: Option<usize>,
    /// network | oracle
    #[arg(long)]
    heads: Option<String>,
    /// network | average
    #[arg(long)]
    refiner: Option<String>,
    #[arg(long, conflicts_with = "seed")]
    weights: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    zero_heads: bool,
    #[arg(long)]
    zero_refine: bool,
    #[arg(long)]
    dump_masks: bool,
    #[arg(long)]
    dump_buffers: bool,
    /// Defaults to `<output>/dumps`.
    #[arg(long)]
    dump_dir: Option<PathBuf>,
    /// perpixel | global
    #[arg(long)]
    loss_norm: Option<String>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// open-close | close-open | none
    #[arg(long)]
    morph: Option<String>,
    #[arg(long)]
    oracle_noise: Option<f64>,
    #[arg(long)]
    noise_seed: Option<u64>,
    /// Compute metrics on unquantized frames.
    #[arg(long)]
    no_quantize_metrics: bool,
    #[command(flatten)]
    net: NetArgs,
}

#[derive(Args)]
struct DegradeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SCALE)]
    scale: usize,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    sigma: f64,
}

#[derive(Args)]
struct InitArgs {
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_SCALE)]
    scale: usize,
    #[arg(long, default_value_t = 3)]
    buffer: usize,
    #[command(flatten)]
    net: NetArgs,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 3,
        Error::Weights { .. } => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(3),
            };
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Degrade(a) => degrade(a),
        Command::InitWeights(a) => init_weights(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("etdm: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn parse_opt<T: std::str::FromStr<Err = Error>>(flag: Option<String>, file: &ConfigFile, key: &str) -> Result<Option<T>> {
    flag.or_else(|| file.raw(key).map(str::to_string))
        .map(|s| s.parse())
        .transpose()
}

fn network_config(net: &NetArgs, file: &ConfigFile, scale: usize, buffer: usize) -> Result<NetworkConfig> {
    let d = NetworkConfig::default();
    let pick = |flag: Option<usize>, key: &str, default: usize| -> Result<usize> {
        Ok(flag.or(file.get(key)?).unwrap_or(default))
    };
    let cfg = NetworkConfig {
        branch_channels: pick(net.branch_channels, "branch-channels", d.branch_channels)?,
        branch_blocks: pick(net.branch_blocks, "branch-blocks", d.branch_blocks)?,
        trunk_blocks: pick(net.trunk_blocks, "trunk-blocks", d.trunk_blocks)?,
        refine_channels: pick(net.refine_channels, "refine-channels", d.refine_channels)?,
        refine_blocks: pick(net.refine_blocks, "refine-blocks", d.refine_blocks)?,
        hv_dilation: pick(net.hv_dilation, "hv-dilation", d.hv_dilation)?,
        scale,
        buffer_size: buffer.max(1),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn required(flag: Option<PathBuf>, file: &ConfigFile, key: &str) -> Result<PathBuf> {
    flag.or_else(|| file.raw(key).map(PathBuf::from))
        .ok_or_else(|| Error::Config(format!("--{key} is required")))
}

fn run(a: RunArgs) -> Result<()> {
    let file = match &a.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let d = PipelineConfig::default();
    let input = required(a.input, &file, "input")?;
    let output = required(a.output, &file, "output")?;
    let hr_dir = a.hr.or_else(|| file.raw("hr").map(PathBuf::from));
    let report_path = a.report.or_else(|| file.raw("report").map(PathBuf::from));
    let config = PipelineConfig {
        scale: a.scale.or(file.get("scale")?).unwrap_or(d.scale),
        sigma: a.sigma.or(file.get("sigma")?).unwrap_or(d.sigma),
        tau: a.tau.or(file.get("tau")?).unwrap_or(d.tau),
        buffer: a.buffer.or(file.get("buffer")?).unwrap_or(d.buffer),
        lookahead: a.lookahead.or(file.get("lookahead")?),
        heads: parse_opt::<HeadMode>(a.heads, &file, "heads")?.unwrap_or(d.heads),
        refiner: parse_opt::<RefinerKind>(a.refiner, &file, "refiner")?.unwrap_or(d.refiner),
        morph: parse_opt::<MorphRecipe>(a.morph, &file, "morph")?.unwrap_or(d.morph),
        loss_norm: parse_opt::<LossNorm>(a.loss_norm, &file, "loss-norm")?.unwrap_or(d.loss_norm),
        quantize_metrics: !(a.no_quantize_metrics || file.flag("no-quantize-metrics")?.unwrap_or(false)),
        oracle_noise: a.oracle_noise.or(file.get("oracle-noise")?).unwrap_or(d.oracle_noise),
        noise_seed: a.noise_seed.or(file.get("noise-seed")?).unwrap_or(d.noise_seed),
    };
    config.validate()?;
    let switch = |flag: bool, key: &str| -> Result<bool> { Ok(flag || file.flag(key)?.unwrap_or(false)) };
    let (zero_heads, zero_refine) = (switch(a.zero_heads, "zero-heads")?, switch(a.zero_refine, "zero-refine")?);
    let (dump_masks, dump_buffers) = (switch(a.dump_masks, "dump-masks")?, switch(a.dump_buffers, "dump-buffers")?);

    let weights_path = a.weights.or_else(|| file.raw("weights").map(PathBuf::from));
    let seed = a.seed.or(file.get("seed")?);
    if weights_path.is_some() && seed.is_some() {
        return Err(Error::Config("--weights and --seed are mutually exclusive".into()));
    }
    let needs_weights =
        config.heads == HeadMode::Network || (config.buffer > 0 && config.refiner == RefinerKind::Network);
    let weights = if needs_weights {
        let mut w = match &weights_path {
            Some(p) => NetworkWeights::load(p)?,
            None => NetworkWeights::init(
                network_config(&a.net, &file, config.scale, config.buffer)?,
                seed.unwrap_or(0),
            )?,
        };
        if zero_heads {
            w.zero_heads();
        }
        if zero_refine {
            w.zero_refinement();
        }
        Some(w)
    } else {
        None
    };

    let (lr, format) = read_frames(&input, Tier::Lr)?;
    let hr = match &hr_dir {
        Some(dir) => Some(read_frames(dir, Tier::Hr)?.0),
        None => None,
    };
    let mut observer = DumpObserver {
        dir: a.dump_dir.unwrap_or_else(|| output.join("dumps")),
        masks: dump_masks,
        buffers: dump_buffers,
    };
    let out = run_sequence(&lr, hr.as_deref(), &config, weights.as_ref(), &IdentityAlign, &mut observer)?;
    write_frames(&output, &out.sr, format)?;
    if hr.is_some() {
        println!("{}", out.report.summary_line());
    }
    if let Some(p) = report_path {
        write_report(&out.report, &p)?;
    }
    Ok(())
}

fn write_report(report: &SequenceReport, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::Input(format!("{}: {e}", parent.display())))?;
    }
    report.write(path)
}

fn degrade(a: DegradeArgs) -> Result<()> {
    let (hr, format) = read_frames(&a.input, Tier::Hr)?;
    let lr = degrade_sequence(&hr, a.scale, a.sigma)?;
    write_frames(&a.output, &lr, format)
}

fn init_weights(a: InitArgs) -> Result<()> {
    let cfg = network_config(&a.net, &ConfigFile::default(), a.scale, a.buffer)?;
    NetworkWeights::init(cfg, a.seed)?.save(&a.output)
}
