//! Command-line front end. Every command writes its outputs atomically into
//! `--out` together with a manifest that can be replayed.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use clearsky_core::color::{ThreeSampleRgb, DEFAULT_SAMPLE_ALPHA};
use clearsky_core::dataset::{standard_directions, SkyDataset, SunEphemeris};
use clearsky_core::harness::{
    compare, luminance_profile, relative_error_map, render_fisheye, ErrorReport, MapMode, ReconstructedSky, RenderOptions, SpectralPath,
};
use clearsky_core::inversion::{grid_search, refine, Aerosol, Axis, Objective, ParamGrid, RefineOptions};
use clearsky_core::models::{build_bruneton, sky_irradiance, ModelKind, Shared, SkyBuilder};
use clearsky_core::{Error, Vec3};

use crate::cache::TableCache;
use crate::data::{self, ReferenceData};
use crate::error::{AppError, AppResult};
use crate::formats::{self, apply_config, format_spectrum, load_config, write_atomic, RunConfig};
use crate::image::encode_ppm;
use crate::registry::{Context, Provider};
use crate::report::{self, Manifest, RmseRow};
use crate::tables::map_container;

#[derive(Debug, Parser)]
#[command(name = "clearsky", version, about = "Spectral clear-sky models: renders, comparisons, inversion and reports")]
pub struct Cli {
    /// Run configuration (`key = value` lines); defaults apply without it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides one configuration key; repeatable, applied after --config.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fisheye map of one model at one time: PPM, raw map and manifest.
    Render(RenderArgs),
    /// RMSE of models against a reference dataset or model.
    Compare(CompareArgs),
    /// Fits the aerosol parameters (alpha, beta, g) to a reference.
    Invert(InvertArgs),
    /// Sky irradiance of models over an ephemeris.
    Irradiance(IrradianceArgs),
    /// Luminance along a vertical plane through the zenith.
    Profile(ProfileArgs),
    /// Spectral radiance in one direction.
    Spectrum(SpectrumArgs),
    /// Samples a model in the 81 standard directions into a dataset file.
    Generate(GenerateArgs),
    /// Prints the capability table of the models.
    Models,
    /// Runs the command recorded in a manifest again.
    Replay {
        #[arg(value_name = "MANIFEST")]
        manifest: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct TimeArgs {
    /// Sun positions as `time zenith azimuth` rows; the embedded Ithaca
    /// 2013-05-12 table by default.
    #[arg(long, value_name = "PATH")]
    pub ephemeris: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// nishita93, nishita96, preetham, oneal[:samples], haber, bruneton,
    /// elek, hosek or dataset:<path>.
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub time: String,
    #[command(flatten)]
    pub sun: TimeArgs,
    /// radiance-rgb, abs-luminance, rel-luminance, chromaticity or
    /// relative-error.
    #[arg(long, default_value = "radiance-rgb")]
    pub mode: String,
    /// Image width and height in pixels.
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    /// Tone mapping constant; the median disc luminance maps to one half
    /// when omitted.
    #[arg(long)]
    pub exposure: Option<f64>,
    /// Colours from three radiance samples instead of every wavelength.
    #[arg(long)]
    pub three_sample: bool,
    /// Reference sky of the relative-error mode.
    #[arg(long)]
    pub reference: Option<String>,
    /// Band of the relative-error mode, `lo,hi` in nm.
    #[arg(long, value_parser = parse_band, default_value = "360,720")]
    pub band: [f64; 2],
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Comma separated model names.
    #[arg(long, value_delimiter = ',', required = true)]
    pub models: Vec<String>,
    /// dataset:<path>, or a model sampled at the daytime ephemeris rows.
    #[arg(long)]
    pub reference: String,
    #[command(flatten)]
    pub sun: TimeArgs,
    #[arg(long, value_parser = parse_band, default_value = "360,720")]
    pub band: [f64; 2],
    /// Evaluate the models through three-sample spectrum reconstruction.
    #[arg(long)]
    pub three_sample: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    /// dataset:<path>, or a model sampled at the daytime ephemeris rows.
    #[arg(long)]
    pub reference: String,
    #[command(flatten)]
    pub sun: TimeArgs,
    /// `min:max:count` for alpha, beta and g, comma separated.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<ParamGrid>,
    /// Continue from the best grid point with a simplex search.
    #[arg(long)]
    pub refine: bool,
    /// Simplex stops once its RMSE values differ by less than this.
    #[arg(long, default_value_t = RefineOptions::default().tolerance)]
    pub tolerance: f64,
    #[arg(long, default_value_t = RefineOptions::default().max_evaluations)]
    pub max_evaluations: usize,
    #[arg(long, value_parser = parse_band, default_value = "360,720")]
    pub band: [f64; 2],
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IrradianceArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub models: Vec<String>,
    #[command(flatten)]
    pub sun: TimeArgs,
    #[arg(long, value_parser = parse_band, default_value = "360,720")]
    pub band: [f64; 2],
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub models: Vec<String>,
    #[arg(long)]
    pub time: String,
    #[command(flatten)]
    pub sun: TimeArgs,
    /// Azimuth of the vertical plane in degrees; the sun's by default.
    #[arg(long)]
    pub azimuth: Option<f64>,
    /// Zenith step in degrees, at most 1.
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub time: String,
    #[command(flatten)]
    pub sun: TimeArgs,
    /// View direction `zenith,azimuth` in degrees.
    #[arg(long, value_parser = parse_band)]
    pub direction: [f64; 2],
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub model: String,
    #[command(flatten)]
    pub sun: TimeArgs,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

fn parse_band(s: &str) -> Result<[f64; 2], String> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| format!("'{x}' is not a number"))).collect::<Result<_, _>>()?;
    match v[..] {
        [a, b] if a.is_finite() && b.is_finite() => Ok([a, b]),
        _ => Err("expected two comma separated numbers".to_string()),
    }
}

fn parse_grid(s: &str) -> Result<ParamGrid, String> {
    let axes: Vec<Axis> = s
        .split(',')
        .map(|a| {
            let p: Vec<&str> = a.split(':').collect();
            let [lo, hi, n] = p[..] else { return Err(format!("axis '{a}' is not min:max:count")) };
            let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("'{x}' is not a number"));
            let count = n.trim().parse::<usize>().map_err(|_| format!("'{n}' is not a count"))?;
            Ok(Axis { min: num(lo)?, max: num(hi)?, count })
        })
        .collect::<Result<_, _>>()?;
    match axes[..] {
        [alpha, beta, g] => Ok(ParamGrid { alpha, beta, g }),
        _ => Err("expected three axes: alpha, beta and g".to_string()),
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// code, printing errors to stderr.
pub fn main_with_args(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli, args.get(1..).unwrap_or_default().to_vec()) {
        Ok(outputs) => {
            for o in outputs {
                println!("wrote {}", o.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Executes a parsed command line; `args` are recorded in the manifest.
pub fn run(cli: Cli, args: Vec<String>) -> AppResult<Vec<PathBuf>> {
    if let Command::Replay { manifest } = &cli.command {
        let recorded = Manifest::load_args(manifest)?;
        let mut full = vec!["clearsky".to_string()];
        full.extend(recorded.iter().cloned());
        let cli = Cli::try_parse_from(&full).map_err(|e| AppError::parse(manifest.display().to_string(), 0, e.to_string()))?;
        if matches!(cli.command, Command::Replay { .. }) {
            return Err(AppError::parse(manifest.display().to_string(), 0, "a manifest cannot replay another manifest"));
        }
        return run(cli, recorded);
    }
    if let Command::Models = &cli.command {
        print!("{}", capability_table());
        return Ok(Vec::new());
    }
    let ctx = context(&cli)?;
    let mut run = Run { ctx: &ctx, cli: &cli, args, outputs: Vec::new(), models: Vec::new(), datasets: Vec::new() };
    match &cli.command {
        Command::Render(a) => run.render(a)?,
        Command::Compare(a) => run.compare(a)?,
        Command::Invert(a) => run.invert(a)?,
        Command::Irradiance(a) => run.irradiance(a)?,
        Command::Profile(a) => run.profile(a)?,
        Command::Spectrum(a) => run.spectrum(a)?,
        Command::Generate(a) => run.generate(a)?,
        Command::Models | Command::Replay { .. } => unreachable!("handled above"),
    }
    run.finish()
}

fn context(cli: &Cli) -> AppResult<Context> {
    let mut config = match &cli.config {
        Some(p) => load_config(p)?,
        None => RunConfig::defaults()?,
    };
    if !cli.set.is_empty() {
        apply_config(&mut config, "--set", &cli.set.join("\n"), Path::new("."))?;
    }
    Ok(Context::new(config, ReferenceData::embedded()?, TableCache::from_env()))
}

fn load_ephemeris(a: &TimeArgs) -> AppResult<SunEphemeris> {
    match &a.ephemeris {
        Some(p) => formats::load_ephemeris(p),
        None => data::ithaca_ephemeris(),
    }
}

/// File name part for a model name.
fn stem(name: &str) -> String {
    let name = match name.strip_prefix("dataset:") {
        Some(p) => format!("dataset-{}", Path::new(p).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()),
        None => name.to_string(),
    };
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '-' }).collect()
}

/// Shortest decimal of `v` to six places.
fn short(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

pub fn capability_table() -> String {
    let mut out = format!(
        "{:<10} {:<13} {:<7} {:<8} {:<9} {:<11} {:<11} {:<7}\n",
        "model", "viewpoints", "aerial", "sunset", "orders", "precompute", "memory", "render"
    );
    for k in ModelKind::ALL {
        let c = k.capabilities();
        let yes = |b: bool| if b { "yes" } else { "no" };
        out.push_str(&format!(
            "{:<10} {:<13} {:<7} {:<8} {:<9} {:<11} {:<11} {:<7}\n",
            k.name(),
            format!("{:?}", c.viewpoints),
            yes(c.aerial_perspective),
            yes(c.sun_below_horizon),
            format!("{:?}", c.scattering_orders),
            c.precompute_time.to_string(),
            c.precompute_memory.to_string(),
            c.render_time.to_string()
        ));
    }
    out
}

struct Run<'a> {
    ctx: &'a Context,
    cli: &'a Cli,
    args: Vec<String>,
    outputs: Vec<PathBuf>,
    models: Vec<String>,
    datasets: Vec<String>,
}

impl Run<'_> {
    fn write(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> AppResult<()> {
        let p = dir.join(name);
        write_atomic(&p, bytes)?;
        self.outputs.push(p);
        Ok(())
    }

    fn provider(&mut self, name: &str) -> AppResult<Provider> {
        self.models.push(name.to_string());
        if let Some(p) = name.strip_prefix("dataset:") {
            self.datasets.push(p.to_string());
        }
        self.ctx.provider(name)
    }

    fn command_name(&self) -> &'static str {
        match self.cli.command {
            Command::Render(_) => "render",
            Command::Compare(_) => "compare",
            Command::Invert(_) => "invert",
            Command::Irradiance(_) => "irradiance",
            Command::Profile(_) => "profile",
            Command::Spectrum(_) => "spectrum",
            Command::Generate(_) => "generate",
            Command::Models => "models",
            Command::Replay { .. } => "replay",
        }
    }

    fn out_dir(&self) -> PathBuf {
        match &self.cli.command {
            Command::Render(a) => a.out.clone(),
            Command::Compare(a) => a.out.clone(),
            Command::Invert(a) => a.out.clone(),
            Command::Irradiance(a) => a.out.clone(),
            Command::Profile(a) => a.out.clone(),
            Command::Spectrum(a) => a.out.clone(),
            Command::Generate(a) => a.out.clone(),
            Command::Models | Command::Replay { .. } => PathBuf::from("."),
        }
    }

    fn finish(self) -> AppResult<Vec<PathBuf>> {
        let out_dir = self.out_dir();
        let m = Manifest {
            command: self.command_name().to_string(),
            config: self.cli.config.clone(),
            models: self.models,
            datasets: self.datasets,
            outputs: self.outputs.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect(),
            out_dir,
            args: self.args,
        };
        let mut outputs = self.outputs;
        outputs.push(m.save()?);
        Ok(outputs)
    }

    /// Sun direction at `time`: a dataset's own record, else the ephemeris.
    fn sun_at(&self, provider: &Provider, time: &str, sun: &TimeArgs) -> AppResult<Vec3> {
        if let Provider::Dataset { .. } = provider {
            return Ok(provider.record(Some(time), Vec3::ZENITH)?.expect("dataset").sun_direction());
        }
        Ok(load_ephemeris(sun)?.find(time)?.sun_direction())
    }

    /// `name` as a reference dataset, sampling models at the ephemeris.
    fn reference(&mut self, name: &str, sun: &TimeArgs) -> AppResult<SkyDataset> {
        match self.provider(name)? {
            Provider::Dataset { data, .. } => Ok(data),
            Provider::Model { builder, .. } => Ok(SkyDataset::synthesize(builder.as_ref(), &load_ephemeris(sun)?, &standard_directions())?),
        }
    }

    fn three_sample(&self) -> AppResult<ThreeSampleRgb> {
        Ok(ThreeSampleRgb::new(&self.ctx.config.params.solar_spectrum, &self.ctx.reference.cmf, DEFAULT_SAMPLE_ALPHA)?)
    }

    fn render(&mut self, a: &RenderArgs) -> AppResult<()> {
        let mode = MapMode::from_name(&a.mode).ok_or_else(|| {
            Error::InvalidInput(format!("unknown mode '{}'; expected radiance-rgb, abs-luminance, rel-luminance, chromaticity or relative-error", a.mode))
        })?;
        let provider = self.provider(&a.model)?;
        let sun = self.sun_at(&provider, &a.time, &a.sun)?;
        let source = provider.source(Some(&a.time), sun)?;
        let image = if mode == MapMode::RelativeError {
            let name = a.reference.as_deref().ok_or_else(|| Error::InvalidInput("relative-error mode needs --reference".into()))?;
            let reference = self.provider(name)?;
            let rsource = reference.source(Some(&a.time), sun)?;
            relative_error_map(source.as_ref(), rsource.as_ref(), sun, a.size, a.band)?
        } else {
            let conv = self.three_sample()?;
            let path = if a.three_sample { SpectralPath::ThreeSample(&conv) } else { SpectralPath::Full };
            let opts = RenderOptions { mode, size: a.size, cmf: &self.ctx.reference.cmf, path, exposure: a.exposure };
            render_fisheye(source.as_ref(), sun, &opts)?
        };
        let base = format!("{}-{}-{}", stem(&a.model), stem(&a.time), mode.name());
        self.write(&a.out, &format!("{base}.ppm"), &encode_ppm(&image))?;
        self.write(&a.out, &format!("{base}.map"), &map_container(&image).encode())?;
        Ok(())
    }

    fn compare(&mut self, a: &CompareArgs) -> AppResult<()> {
        let reference = self.reference(&a.reference, &a.sun)?;
        let conv = self.three_sample()?;
        let mut rows = Vec::new();
        for name in &a.models {
            let provider = self.provider(name)?;
            let mut reports: Vec<ErrorReport> = Vec::new();
            for rec in reference.records() {
                let source = provider.source(Some(&rec.time), rec.sun_direction())?;
                let r = if a.three_sample {
                    let rs = ReconstructedSky { inner: source.as_ref(), converter: &conv, cmf: &self.ctx.reference.cmf, basis: &self.ctx.reference.daylight };
                    compare(&rs, rec, a.band)?
                } else {
                    compare(source.as_ref(), rec, a.band)?
                };
                reports.push(r);
            }
            rows.push(RmseRow {
                model: name.clone(),
                rmse_mw: ErrorReport::pooled_rmse_mw(&reports),
                excluded: reports.iter().map(|r| r.excluded()).sum(),
            });
            self.write(&a.out, &format!("errors-{}.csv", stem(name)), report::direction_csv(&reports).as_bytes())?;
        }
        let table = report::rmse_table(&rows, &a.reference, a.band);
        print!("{table}");
        self.write(&a.out, "rmse.txt", table.as_bytes())?;
        self.write(&a.out, "rmse.csv", report::rmse_csv(&rows).as_bytes())?;
        Ok(())
    }

    fn invert(&mut self, a: &InvertArgs) -> AppResult<()> {
        let reference = self.reference(&a.reference, &a.sun)?;
        let params = self.ctx.config.params.clone();
        let tables = self.ctx.config.models.inversion;
        let forward = move |p: Aerosol| -> clearsky_core::Result<Box<dyn SkyBuilder>> {
            let model = build_bruneton(&params.with_aerosol(p.alpha, p.beta, p.g), tables)?;
            Ok(Box::new(Shared(Arc::new(model))))
        };
        let objective = Objective::against(&forward, &reference, a.band);
        let grid = a.grid.unwrap_or_default();
        let best = grid_search(&objective, &grid)?;
        let refined =
            if a.refine { Some(refine(&objective, &grid, &best, RefineOptions { tolerance: a.tolerance, max_evaluations: a.max_evaluations })?) } else { None };
        let fin = refined.as_ref().unwrap_or(&best);
        let mut text = report::inversion_report(&best, refined.as_ref(), objective.evaluations());
        text.push_str(&format!("\n[result]\ntriple = ({}, {}, {})\n", short(fin.params.alpha), short(fin.params.beta), short(fin.params.g)));
        print!("{text}");
        self.write(&a.out, "inversion.txt", text.as_bytes())?;
        let fits: Vec<_> = std::iter::once(&best).chain(refined.as_ref()).collect();
        self.write(&a.out, "surface.csv", report::surface_csv(&fits).as_bytes())?;
        Ok(())
    }

    fn irradiance(&mut self, a: &IrradianceArgs) -> AppResult<()> {
        let eph = load_ephemeris(&a.sun)?;
        let mut names = vec!["sun_zenith_deg".to_string()];
        let mut rows: Vec<(String, Vec<Option<f64>>)> = eph.entries().iter().map(|e| (e.time.clone(), vec![Some(e.zenith_deg)])).collect();
        for name in &a.models {
            let provider = self.provider(name)?;
            names.push(name.clone());
            for (e, row) in eph.entries().iter().zip(rows.iter_mut()) {
                let sun = e.sun_direction();
                let value = match provider.source(Some(&e.time), sun) {
                    Ok(s) => Some(sky_irradiance(s.as_ref(), sun, a.band)?),
                    // rows a model cannot evaluate are left empty
                    Err(AppError::Core(Error::Unsupported(m) | Error::InvalidInput(m))) => {
                        eprintln!("note: {name} at {}: {m}", e.time);
                        None
                    }
                    Err(e) => return Err(e),
                };
                row.1.push(value);
            }
        }
        self.write(&a.out, "irradiance.csv", report::series_csv("time", &names, &rows).as_bytes())?;
        Ok(())
    }

    fn profile(&mut self, a: &ProfileArgs) -> AppResult<()> {
        let mut names = Vec::new();
        let mut columns: Vec<Vec<(f64, f64)>> = Vec::new();
        for name in &a.models {
            let provider = self.provider(name)?;
            let sun = self.sun_at(&provider, &a.time, &a.sun)?;
            let az = a.azimuth.unwrap_or_else(|| sun.to_angles().1.to_degrees());
            let source = provider.source(Some(&a.time), sun)?;
            columns.push(luminance_profile(source.as_ref(), sun, az, a.step, &self.ctx.reference.cmf)?);
            names.push(name.clone());
        }
        let rows: Vec<(String, Vec<Option<f64>>)> = (0..columns.first().map_or(0, |c| c.len()))
            .map(|k| (columns[0][k].0.to_string(), columns.iter().map(|c| Some(c[k].1)).collect()))
            .collect();
        self.write(&a.out, &format!("profile-{}.csv", stem(&a.time)), report::series_csv("signed_zenith_deg", &names, &rows).as_bytes())?;
        Ok(())
    }

    fn spectrum(&mut self, a: &SpectrumArgs) -> AppResult<()> {
        let provider = self.provider(&a.model)?;
        let sun = self.sun_at(&provider, &a.time, &a.sun)?;
        let [z, az] = a.direction;
        if !(0.0..=90.0).contains(&z) {
            return Err(Error::InvalidInput(format!("view zenith {z} outside [0, 90] degrees")).into());
        }
        let s = provider.source(Some(&a.time), sun)?.radiance(Vec3::from_angles_deg(z, az), sun)?;
        let header = format!("{} at {}, view zenith {z} azimuth {az} degrees\nwavelength_nm radiance_W_m-2_sr-1_nm-1", a.model, a.time);
        self.write(&a.out, &format!("spectrum-{}-{}.txt", stem(&a.model), stem(&a.time)), format_spectrum(&s, &header).as_bytes())?;
        Ok(())
    }

    fn generate(&mut self, a: &GenerateArgs) -> AppResult<()> {
        let provider = self.provider(&a.model)?;
        let builder = provider.builder().ok_or_else(|| Error::InvalidInput("generate needs a model, not a dataset".into()))?;
        let data = SkyDataset::synthesize(builder, &load_ephemeris(&a.sun)?, &standard_directions())?;
        self.write(&a.out, &format!("{}.csv", stem(&a.model)), formats::format_dataset(&data).as_bytes())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argument_parsers() {
        assert_eq!(parse_band("360,720").unwrap(), [360.0, 720.0]);
        assert!(parse_band("360").is_err());
        let g = parse_grid("0:2:11,0.02:0.2:10,0.5:0.9:5").unwrap();
        assert_eq!(g, ParamGrid::default());
        assert!(parse_grid("0:2:11").is_err());
        assert_eq!(short(0.7000000000000001), "0.7");
        assert_eq!(short(0.04), "0.04");
        assert_eq!(stem("dataset:/a/b/ref.csv"), "dataset-ref");
    }

    #[test]
    fn capability_table_lists_every_model() {
        let t = capability_table();
        assert_eq!(t.lines().count(), 9);
        assert!(t.lines().any(|l| l.starts_with("preetham") && l.contains(" no ")));
    }

    #[test]
    fn usage_errors_exit_with_one() {
        assert_eq!(main_with_args(vec!["clearsky".into(), "render".into()]), 1);
        assert_eq!(main_with_args(vec!["clearsky".into(), "--help".into()]), 0);
    }
}
