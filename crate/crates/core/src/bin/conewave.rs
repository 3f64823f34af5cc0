use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use conewave::blue_exceptional::{
    exceptional_budget, exceptional_tubes_for_blue, find_bad_cubes, uncovered_cubes, ExceptionalOptions,
    TOUCH_DILATION,
};
use conewave::config::Settings;
use conewave::extraction::{extract_profile, ExtractionOptions, DECREMENT_FLOOR};
use conewave::geometry::{direction, Point, Torus, Tube};
use conewave::io;
use conewave::norms::QuadratureScheme;
use conewave::profile::{
    count_budget, fungibility_partition, matched_train, random_suite, sharpness_experiment, universal_tube_family,
    verify_fungibility, verify_profile, PsiSpec, C_COMP, C_F, C_V, K_I, K_U,
};
use conewave::tube_cover::{
    greedy_tube_cover, random_separated_family, verify_pointwise_bound, CoverOptions, COVER_BUDGET_CONSTANT,
};
use conewave::wavefield::{
    make_blue_tube_wave, make_red_cube_bump, random_blue_packets, random_colored_wave, Color, FrequencyLattice,
    SpectralWave, DEFAULT_MARGIN,
};

#[derive(Parser)]
#[command(name = "conewave", version, about = "Cone waves, light-ray tubes and tube extraction")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Spatial dimension (only 2 is supported).
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Minimum lattice points per axis.
    #[arg(long = "grid-N", global = true)]
    grid_n: Option<usize>,
    /// Torus side length.
    #[arg(long = "box-L", global = true)]
    box_l: Option<f64>,
    /// Half-width W of the time window [-W, W].
    #[arg(long, global = true)]
    window: Option<f64>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// key = value settings file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum WaveKind {
    Random,
    Bump,
    Tube,
    Train,
    Packets,
}

#[derive(Subcommand)]
enum Command {
    /// Write a wave as CWAV1 plus JSON sidecar.
    GenWave {
        #[arg(long, value_enum, default_value = "random")]
        kind: WaveKind,
        #[arg(long, default_value = "red")]
        color: Color,
        #[arg(long, default_value_t = 0)]
        k: u32,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
        /// Centre time of bumps, tubes and trains.
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long, num_args = 2, value_names = ["X0", "X1"])]
        x0: Option<Vec<f64>>,
        /// Direction angle from e1, radians.
        #[arg(long, default_value_t = 0.2094)]
        theta: f64,
        #[arg(long, default_value_t = 3)]
        packets: usize,
        #[arg(long, default_value = "wave.cwav")]
        out: PathBuf,
    },
    /// Greedy cover of a random separated tube family.
    Cover {
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        k: u32,
        #[arg(long, default_value_t = 40)]
        tubes: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Exceptional tubes of a blue wave.
    BlueTubes {
        #[arg(long)]
        delta: f64,
        /// Band of the generated wave when --wave is not given.
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long)]
        wave: Option<PathBuf>,
    },
    /// Iterated tube extraction of a red wave.
    Extract {
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        #[arg(long, default_value_t = 2.0)]
        c_dilate: f64,
        #[arg(long)]
        wave: Option<PathBuf>,
    },
    /// Universal tube family of a red wave checked against blue waves.
    Profile {
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        #[arg(long, default_value_t = C_COMP)]
        c_comp: f64,
        #[arg(long, default_value_t = 2.0)]
        c_dilate: f64,
        /// Random blue waves per band.
        #[arg(long, default_value_t = 3)]
        per_k: usize,
        #[arg(long)]
        wave: Option<PathBuf>,
    },
    /// Fungibility split of the time axis.
    Fungibility {
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        #[arg(long, default_value_t = 2.0)]
        c_dilate: f64,
        #[arg(long, default_value_t = 2)]
        per_k: usize,
        #[arg(long)]
        wave: Option<PathBuf>,
    },
    /// Blue tube wave against the matched cube train, per band.
    Sharpness {
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3")]
        ks: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seeds: Vec<u64>,
    },
}

type Outcome = Result<bool, Box<dyn std::error::Error>>;

fn settings(g: &Global) -> Result<Settings, Box<dyn std::error::Error>> {
    let mut s = match &g.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    if let Some(v) = g.n {
        s.n = v;
    }
    if let Some(v) = g.grid_n {
        s.grid_n = v;
    }
    if let Some(v) = g.box_l {
        s.box_l = v;
    }
    if let Some(v) = g.window {
        s.window = v;
    }
    if let Some(v) = g.dt {
        s.dt = v;
    }
    if let Some(v) = g.seed {
        s.seed = v;
    }
    if let Some(v) = &g.out_dir {
        s.out_dir = v.clone();
    }
    s.validate()?;
    Ok(s)
}

fn out(s: &Settings, name: &str) -> PathBuf {
    s.out_dir.join(name)
}

fn report(line: &str) {
    println!("{line}");
}

fn center(s: &Settings, x0: &Option<Vec<f64>>) -> [f64; 2] {
    match x0 {
        Some(v) => [v[0], v[1]],
        None => [s.box_l / 2.0, s.box_l / 2.0],
    }
}

fn load_or(path: &Option<PathBuf>, make: impl FnOnce() -> conewave::Result<SpectralWave>) -> conewave::Result<SpectralWave> {
    match path {
        Some(p) => io::read_wave(p),
        None => make(),
    }
}

fn gen_wave(s: &Settings, cmd: &Command) -> Outcome {
    let Command::GenWave { kind, color, k, margin, t0, x0, theta, packets, out: path } = cmd else {
        unreachable!()
    };
    let x = center(s, x0);
    let w = match kind {
        WaveKind::Random => {
            let lat = FrequencyLattice::for_band(*k, s.box_l, s.grid_n)?;
            random_colored_wave(&lat, *color, *k, *margin, s.seed)?
        }
        WaveKind::Bump => {
            let lat = FrequencyLattice::for_band(0, s.box_l, s.grid_n)?;
            make_red_cube_bump(&lat, Point::new(*t0, x), *margin)?
        }
        WaveKind::Tube => {
            let lat = FrequencyLattice::for_band(*k, s.box_l, s.grid_n)?;
            make_blue_tube_wave(&lat, *t0, x, direction(*theta), *k)?
        }
        WaveKind::Train => {
            let tube = Tube::finite(*t0, x, direction(*theta), *k);
            let lat = FrequencyLattice::for_band(0, s.box_l, s.grid_n)?;
            let n = tube.axis_cubes()?.len();
            let c = vec![1.0 / (n as f64).sqrt(); n];
            conewave::wavefield::make_red_cube_train(&lat, &tube, &c, s.seed)?
        }
        WaveKind::Packets => {
            let lat = FrequencyLattice::for_band(*k, s.box_l, s.grid_n)?;
            random_blue_packets(&lat, *k, *packets, s.seed)?
        }
    };
    let path = if path.is_absolute() { path.clone() } else { out(s, &path.to_string_lossy()) };
    io::write_wave(&path, &w)?;
    report(&format!(
        "wrote {} (N = {}, color {:?}, k = {}, mass {:.6})",
        path.display(),
        w.lattice().points(),
        w.color(),
        w.k(),
        w.mass()
    ));
    Ok(true)
}

fn cover(s: &Settings, delta: f64, k: u32, tubes: usize, samples: usize) -> Outcome {
    let fam = random_separated_family(Torus::new(s.box_l), k, tubes, s.seed)?;
    let res = greedy_tube_cover(&fam, delta, &CoverOptions::default())?;
    let worst = verify_pointwise_bound(&fam, &res.tubes, samples, s.seed);
    io::write_tubes(&out(s, "cover_tubes.json"), &res.tubes)?;
    let rows: Vec<Vec<String>> = res
        .classes
        .iter()
        .enumerate()
        .map(|(j, c)| {
            vec![
                j.to_string(),
                c.witness.t.to_string(),
                c.witness.x[0].to_string(),
                c.witness.x[1].to_string(),
                c.residual.to_string(),
                c.members.len().to_string(),
                c.emitted.len().to_string(),
            ]
        })
        .collect();
    io::write_csv(
        &out(s, "cover_classes.csv"),
        &["class", "t", "x0", "x1", "residual", "members", "emitted"],
        &rows,
    )?;
    let cap = (2.0 / delta).ceil() as usize;
    let budget = COVER_BUDGET_CONSTANT * delta.powi(-3);
    report(&format!(
        "family {} tubes, {} classes (cap {cap}), {} output tubes (budget {budget:.0}), residual {worst:.4} (bound {delta})",
        fam.len(),
        res.iterations(),
        res.tubes.len()
    ));
    Ok(res.iterations() <= cap && (res.tubes.len() as f64) <= budget && worst <= delta)
}

fn blue_tubes(s: &Settings, delta: f64, k: u32, wave: &Option<PathBuf>, scheme: &QuadratureScheme) -> Outcome {
    let psi = load_or(wave, || {
        let lat = FrequencyLattice::for_band(k, s.box_l, s.grid_n)?;
        random_blue_packets(&lat, k, 3, s.seed)
    })?;
    let ex = exceptional_tubes_for_blue(&psi, delta, s.window, &ExceptionalOptions::default())?;
    let bad = find_bad_cubes(&psi, delta, scheme)?;
    let missed = uncovered_cubes(Torus::new(s.box_l), &bad, &ex.tubes, TOUCH_DILATION)?;
    io::write_tubes(&out(s, "blue_tubes.json"), &ex.tubes)?;
    let rows: Vec<Vec<String>> = bad
        .iter()
        .map(|q| {
            let covered = !missed.iter().any(|m| m == q);
            vec![
                q.center.t.to_string(),
                q.center.x[0].to_string(),
                q.center.x[1].to_string(),
                covered.to_string(),
            ]
        })
        .collect();
    io::write_csv(&out(s, "bad_cubes.csv"), &["t", "x0", "x1", "covered"], &rows)?;
    let budget = exceptional_budget(delta);
    report(&format!(
        "{} bad cubes, {} uncovered after {TOUCH_DILATION}-dilation, {} tubes (budget {budget:.0})",
        bad.len(),
        missed.len(),
        ex.tubes.len()
    ));
    Ok(missed.is_empty() && (ex.tubes.len() as f64) <= budget)
}

fn default_train(s: &Settings) -> conewave::Result<SpectralWave> {
    Ok(matched_train(3, s.box_l, s.seed)?.1)
}

fn extract(s: &Settings, delta: f64, max_iter: usize, c_dilate: f64, wave: &Option<PathBuf>, scheme: &QuadratureScheme) -> Outcome {
    let phi = load_or(wave, || default_train(s))?;
    let mut opts = ExtractionOptions::new(delta);
    opts.max_iter = max_iter;
    opts.c_dilate = c_dilate;
    let ex = extract_profile(&phi, &opts, scheme)?;
    io::write_tubes(&out(s, "extract_tubes.json"), &ex.tubes)?;
    io::write_wave(&out(s, "remainder.cwav"), &ex.remainder)?;
    let rows: Vec<Vec<String>> = ex
        .trace
        .iter()
        .map(|st| {
            vec![
                st.iteration.to_string(),
                st.value.to_string(),
                st.mu.to_string(),
                st.mass_before.to_string(),
                st.mass_after.to_string(),
            ]
        })
        .collect();
    io::write_csv(&out(s, "trace.csv"), &["iteration", "value", "mu", "mass_before", "mass_after"], &rows)?;
    let floor = DECREMENT_FLOOR * delta * delta / (1.0 / delta).ln();
    let min_dec = ex.trace.iter().map(|t| t.decrement).fold(f64::INFINITY, f64::min);
    report(&format!(
        "{} iterations, remainder mass {:.4}, remainder concentration {:.4} (threshold {:.4}), smallest decrement {:.4} (floor {floor:.4}){}",
        ex.trace.len(),
        ex.remainder.mass(),
        ex.remainder_concentration,
        delta * phi.mass().sqrt(),
        if ex.trace.is_empty() { 0.0 } else { min_dec },
        if ex.partial { ", stopped at the iteration cap" } else { "" }
    ));
    Ok(!ex.partial && ex.trace.iter().all(|t| t.decrement >= floor))
}

fn suite(per_k: usize, seed: u64) -> Vec<PsiSpec> {
    random_suite(&[0, 1, 2, 3], per_k, seed)
}

fn profile(s: &Settings, delta: f64, c_comp: f64, c_dilate: f64, per_k: usize, wave: &Option<PathBuf>, scheme: &QuadratureScheme) -> Outcome {
    let phi = load_or(wave, || default_train(s))?;
    let mut opts = ExtractionOptions::new(delta);
    opts.c_dilate = c_dilate;
    let fam = universal_tube_family(&phi, delta, c_comp, &opts, scheme)?;
    let rep = verify_profile(&phi, &fam.tubes, delta, &suite(per_k, s.seed), C_V, scheme)?;
    io::write_tubes(&out(s, "universal_tubes.json"), &fam.tubes)?;
    io::write_json(&out(s, "profile_report.json"), &rep)?;
    let rows: Vec<Vec<String>> = rep
        .records
        .iter()
        .map(|r| vec![r.label.clone(), r.outside.to_string(), r.unrestricted.to_string()])
        .collect();
    io::write_csv(&out(s, "profile.csv"), &["psi", "outside", "unrestricted"], &rows)?;
    if let Some(first) = rep.records.first() {
        let spec = &suite(per_k, s.seed)[0];
        let psi = spec.build(s.box_l, phi.lattice().points())?;
        write_product_heatmap(s, &phi, &psi, &fam.tubes, scheme, &format!("heatmap_{}", first.k))?;
    }
    let budget = count_budget(K_U, delta);
    report(&format!(
        "{} universal tubes (budget {budget:.0}); max outside ratio {:.4} vs {:.4}",
        fam.tubes.len(),
        rep.max_outside(),
        C_V * delta
    ));
    Ok(rep.passes && (fam.tubes.len() as f64) <= budget)
}

/// |phi psi| at t = 0 on the common grid with the tube cross-sections overlaid.
fn write_product_heatmap(
    s: &Settings,
    phi: &SpectralWave,
    psi: &SpectralWave,
    tubes: &[Tube],
    scheme: &QuadratureScheme,
    stem: &str,
) -> Result<(), Box<dyn std::error::Error>> {
    let grid = conewave::norms::common_grid(phi.lattice(), psi.lattice())?;
    let mut a = conewave::wavefield::Evaluator::new(phi, grid)?;
    let mut b = conewave::wavefield::Evaluator::new(psi, grid)?;
    let t = scheme.times()[scheme.steps() / 2];
    let fa: Vec<f64> = a.eval(t).iter().map(|z| z.norm()).collect();
    let v: Vec<f64> = fa.iter().zip(b.eval(t)).map(|(x, y)| x * y.norm()).collect();
    let img = io::heatmap(&v, grid, tubes, t);
    io::write_ppm(&out(s, &format!("{stem}.ppm")), grid.points, grid.points, &img)?;
    Ok(())
}

fn fungibility(s: &Settings, delta: f64, c_dilate: f64, per_k: usize, wave: &Option<PathBuf>, scheme: &QuadratureScheme) -> Outcome {
    let phi = load_or(wave, || default_train(s))?;
    let mut opts = ExtractionOptions::new(delta);
    opts.c_dilate = c_dilate;
    let fam = universal_tube_family(&phi, delta, C_COMP, &opts, scheme)?;
    let f = fungibility_partition(&phi, &fam.tubes, delta, scheme);
    let rep = verify_fungibility(&phi, &f.intervals, &suite(per_k, s.seed), delta, C_F, scheme)?;
    let rows: Vec<Vec<String>> = f
        .intervals
        .iter()
        .enumerate()
        .map(|(j, (a, b))| vec![j.to_string(), a.to_string(), b.to_string()])
        .collect();
    io::write_csv(&out(s, "intervals.csv"), &["interval", "start", "end"], &rows)?;
    io::write_json(&out(s, "fungibility_report.json"), &rep)?;
    let budget = count_budget(K_I, delta);
    report(&format!(
        "integral of g {:.4}, {} intervals (budget {budget:.0}); max ratio {:.4} vs {:.4}",
        f.integral,
        f.intervals.len(),
        rep.max_ratio,
        C_F * delta
    ));
    Ok(rep.passes && (f.intervals.len() as f64) <= budget)
}

fn sharpness(s: &Settings, ks: &[u32], seeds: &[u64], scheme: &QuadratureScheme) -> Outcome {
    let rows = sharpness_experiment(ks, seeds, s.box_l, scheme)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                r.seed.to_string(),
                r.rho.to_string(),
                r.lp.to_string(),
                r.lp_scaled.to_string(),
            ]
        })
        .collect();
    io::write_csv(&out(s, "sharpness.csv"), &["k", "seed", "rho", "lp", "lp_scaled"], &table)?;
    for r in &rows {
        report(&format!("k = {} seed = {}: rho {:.4}, scaled L^p ratio {:.4}", r.k, r.seed, r.rho, r.lp_scaled));
    }
    Ok(true)
}

fn run(cli: &Cli) -> Outcome {
    let s = settings(&cli.global)?;
    std::fs::create_dir_all(&s.out_dir)?;
    let scheme = s.scheme()?;
    match &cli.command {
        c @ Command::GenWave { .. } => gen_wave(&s, c),
        Command::Cover { delta, k, tubes, samples } => cover(&s, *delta, *k, *tubes, *samples),
        Command::BlueTubes { delta, k, wave } => blue_tubes(&s, *delta, *k, wave, &scheme),
        Command::Extract { delta, max_iter, c_dilate, wave } => extract(&s, *delta, *max_iter, *c_dilate, wave, &scheme),
        Command::Profile { delta, c_comp, c_dilate, per_k, wave } => {
            profile(&s, *delta, *c_comp, *c_dilate, *per_k, wave, &scheme)
        }
        Command::Fungibility { delta, c_dilate, per_k, wave } => fungibility(&s, *delta, *c_dilate, *per_k, wave, &scheme),
        Command::Sharpness { ks, seeds } => sharpness(&s, ks, seeds, &scheme),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("conewave: an asserted bound was violated");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("conewave: {e}");
            ExitCode::from(2)
        }
    }
}
