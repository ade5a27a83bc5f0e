use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use radial_chaos::chaos::{
    build_periodic_point, certify_mixing, chaos_threshold, find_unimodular_roots, simulate_orbit,
    solve_strip_parameter, verify_periodic, OrbitComponent, Rotation, Verdict,
};
use radial_chaos::eigen::{c_function, calibrate_inversion, radial_eigenfunction};
use radial_chaos::io::{
    fmt17, read_radial_csv, write_c_table_csv, write_eigen_csv, write_orbit_csv, write_radial_csv,
    write_spectral_csv, MultiplierJson,
};
use radial_chaos::model::{lp_norm_radial, ManifoldModel};
use radial_chaos::multiplier::{heat_kernel_profile, symbol_eval, Multiplier};
use radial_chaos::transform::{inverse_transform, relative_l2, transform_on_grid};
use radial_chaos::{Error, Result};

mod config;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "radial-chaos", version, about = "Radial harmonic analysis and multiplier dynamics on hyperbolic models")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized choices (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report n, ρ, density samples and the inversion constant.
    Model,
    /// Radial eigenfunction φ_λ on the model grid.
    Eigen {
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        /// Also write c(λ) for λ = 0.1, 0.2, …, 10.
        #[arg(long)]
        c_table: bool,
    },
    /// Spherical transform of a radial CSV.
    Transform {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        roundtrip: bool,
    },
    /// Heat kernel h_t.
    Heat {
        #[arg(long)]
        t: f64,
        #[arg(long)]
        kernel_out: Option<PathBuf>,
    },
    /// Mixing and periodic-point certificate for (1/ν)T.
    Certify {
        #[arg(long)]
        multiplier: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long, allow_hyphen_values = true)]
        lambda0: String,
        /// Defaults to m_T(λ₀).
        #[arg(long, allow_hyphen_values = true)]
        nu: Option<String>,
    },
    /// Periodic point from one unimodular root.
    Periodic {
        #[arg(long)]
        multiplier: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        rotation: String,
        #[arg(long)]
        p: f64,
        #[arg(long, allow_hyphen_values = true)]
        lambda0: String,
        #[arg(long, allow_hyphen_values = true)]
        nu: Option<String>,
        /// Translation distance of the eigenfunction.
        #[arg(long, default_value_t = 0.0)]
        center: f64,
        /// Check the period through kernel-side application.
        #[arg(long)]
        verify: bool,
    },
    /// Orbit of a combination of eigenfunctions under (1/ν)T.
    Orbit {
        #[arg(long)]
        multiplier: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        nu: String,
        #[arg(long)]
        steps: usize,
        /// Component spectral parameters; coefficients are random unit phases.
        #[arg(long = "lambda", allow_hyphen_values = true, default_values_t = vec!["0.5".to_string()])]
        lambdas: Vec<String>,
        #[arg(long, default_value_t = 4.0)]
        p: f64,
    },
    /// Threshold, strip parameter and verdict for shifted heat e^{-c t0} ν.
    HeatSweep {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        t0: f64,
        #[arg(long)]
        c_list: PathBuf,
    },
}

fn parse_complex(s: &str) -> Result<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let v: Complex64 = t.parse().map_err(|_| Error::Input(format!("cannot parse complex number '{s}'")))?;
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::Input(format!("complex number '{s}' is not finite")));
    }
    Ok(v)
}

fn fmt_complex(z: Complex64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
}

impl Ctx {
    fn file(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        std::fs::write(self.out.join(name), text + "\n")?;
        Ok(())
    }

    fn model(&self) -> Result<ManifoldModel> {
        self.cfg.build_model()
    }
}

#[derive(Serialize)]
struct ModelReport {
    kind: String,
    n: usize,
    rho: f64,
    r_max: f64,
    grid_nodes: usize,
    density: Vec<(f64, f64)>,
    kappa: f64,
}

fn cmd_model(ctx: &Ctx) -> Result<()> {
    let m = ctx.model()?;
    let kappa = calibrate_inversion(&m)?;
    let density: Vec<(f64, f64)> =
        [0.5, 1.0, 2.0, 5.0, 10.0].iter().filter(|r| **r < m.r_max).map(|&r| (r, m.density(r))).collect();
    let report = ModelReport {
        kind: format!("{:?}", m.kind),
        n: m.dimension,
        rho: m.rho,
        r_max: m.r_max,
        grid_nodes: m.grid.len(),
        density,
        kappa,
    };
    println!("model {} n={} rho={} r_max={} nodes={}", report.kind, m.dimension, m.rho, m.r_max, m.grid.len());
    for (r, a) in &report.density {
        println!("A({r}) = {}", fmt17(*a));
    }
    println!("kappa = {}", fmt17(kappa));
    ctx.json("model.json", &report)
}

fn cmd_eigen(ctx: &Ctx, lambda: &str, c_table: bool) -> Result<()> {
    let m = ctx.model()?;
    let l = parse_complex(lambda)?;
    let e = radial_eigenfunction(&m, l)?;
    write_eigen_csv(ctx.file("eigen.csv")?, &e)?;
    println!("lambda = {} ode_residual = {:e} sup|phi| = {}", fmt_complex(l), e.ode_residual, fmt17(e.sup_norm()));
    if c_table {
        let samples = (1..=100).map(|j| c_function(&m, 0.1 * j as f64)).collect::<Result<Vec<_>>>()?;
        write_c_table_csv(ctx.file("c_table.csv")?, &samples)?;
    }
    let tol = ctx.cfg.tolerance("ode_residual");
    if !(e.ode_residual <= tol) {
        return Err(Error::Numerical(format!("ODE residual {:e} exceeds tolerance {tol:e}", e.ode_residual)));
    }
    Ok(())
}

fn cmd_transform(ctx: &Ctx, input: &Path, roundtrip: bool) -> Result<()> {
    let m = ctx.model()?;
    let f = read_radial_csv(&m, input)?;
    let spec = transform_on_grid(&m, &f)?;
    write_spectral_csv(ctx.file("spectral.csv")?, &spec)?;
    for w in &spec.warnings {
        eprintln!("warning: {w}");
    }
    println!("transform of {} on {} nodes, tail {:e}", f.label, spec.values.len(), spec.tail);
    if roundtrip {
        calibrate_inversion(&m)?;
        let back = inverse_transform(&m, &spec)?;
        write_radial_csv(ctx.file("roundtrip.csv")?, &back)?;
        let defect = relative_l2(&m, &f, &back);
        println!("round trip relative L2 defect = {defect:e}");
        let tol = ctx.cfg.tolerance("roundtrip");
        if !(defect <= tol) {
            return Err(Error::Numerical(format!("round-trip defect {defect:e} exceeds {tol:e}")));
        }
    }
    Ok(())
}

fn cmd_heat(ctx: &Ctx, t: f64, kernel_out: Option<&Path>) -> Result<()> {
    let m = ctx.model()?;
    calibrate_inversion(&m)?;
    let h = heat_kernel_profile(&m, t)?;
    let mass = m.integrate_radial(&h.values);
    println!("heat t = {t}: mass = {}, h(1) = {}", fmt17(mass.re), fmt17(h.eval(1.0).re));
    println!("L1 norm = {}", fmt17(lp_norm_radial(&m, &h, 1.0)?));
    let path = kernel_out.map(Path::to_path_buf).unwrap_or_else(|| ctx.out.join("heat_kernel.csv"));
    write_radial_csv(BufWriter::new(File::create(path)?), &h)
}

fn nu_or_symbol(m: &ManifoldModel, t: &Multiplier, nu: Option<&str>, lambda0: Complex64) -> Result<Complex64> {
    match nu {
        Some(s) => parse_complex(s),
        None => symbol_eval(m, t, lambda0),
    }
}

fn cmd_certify(ctx: &Ctx, multiplier: &Path, p: f64, lambda0: &str, nu: Option<&str>) -> Result<()> {
    let m = ctx.model()?;
    let t = MultiplierJson::load(&m, multiplier)?;
    chaos_threshold(&m, p)?;
    let l0 = parse_complex(lambda0)?;
    let nu = nu_or_symbol(&m, &t, nu, l0)?;
    let cert = certify_mixing(&m, &t, nu, l0, p)?;
    ctx.json("certificate.json", &cert)?;
    println!(
        "verdict {} (u_plus {}, u_minus {}, roots {})",
        serde_json::to_value(cert.verdict)?.as_str().unwrap_or("?"),
        cert.u_plus.len(),
        cert.u_minus.len(),
        cert.roots.len()
    );
    for r in &cert.roots {
        println!("root {} at {} residual {:e}", r.rotation, fmt_complex(r.lambda), r.residual);
    }
    if cert.verdict == Verdict::Inconclusive {
        return Err(Error::Numerical("certificate is inconclusive".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct PeriodicReport {
    multiplier: String,
    nu: Complex64,
    point: radial_chaos::chaos::PeriodicPoint,
    diagonal_defect: f64,
    kernel_defect: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_periodic(
    ctx: &Ctx,
    multiplier: &Path,
    rotation: &str,
    p: f64,
    lambda0: &str,
    nu: Option<&str>,
    center: f64,
    verify: bool,
) -> Result<()> {
    let m = ctx.model()?;
    let t = MultiplierJson::load(&m, multiplier)?;
    chaos_threshold(&m, p)?;
    let rot: Rotation = rotation.parse()?;
    let l0 = parse_complex(lambda0)?;
    let nu = nu_or_symbol(&m, &t, nu, l0)?;
    let search = find_unimodular_roots(&m, &t, nu, l0, &[rot], p)?.remove(0);
    let Some(root) = search.root else {
        return Err(Error::Numerical(format!(
            "no root for rotation {rot}: {}",
            search.note.unwrap_or_default()
        )));
    };
    println!("root {} at {} residual {:e}", rot, fmt_complex(root.lambda), root.residual);
    let point = build_periodic_point(&[root], &[center], &[Complex64::new(1.0, 0.0)])?;
    let kernel_defect = if verify {
        calibrate_inversion(&m)?;
        let d = verify_periodic(&m, &t, &point, nu)?;
        println!("period {} kernel-side defect {d:e}", point.period);
        Some(d)
    } else {
        None
    };
    let report = PeriodicReport {
        multiplier: t.label(),
        nu,
        diagonal_defect: point.diagonal_defect(),
        point,
        kernel_defect,
    };
    ctx.json("periodic.json", &report)?;
    if let Some(d) = kernel_defect {
        let tol = ctx.cfg.tolerance("periodic");
        if !(d < tol) {
            return Err(Error::Numerical(format!("kernel-side defect {d:e} exceeds {tol:e}")));
        }
    }
    Ok(())
}

fn cmd_orbit(ctx: &Ctx, multiplier: &Path, nu: &str, steps: usize, lambdas: &[String], p: f64) -> Result<()> {
    let m = ctx.model()?;
    let t = MultiplierJson::load(&m, multiplier)?;
    let nu = parse_complex(nu)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let comps = lambdas
        .iter()
        .map(|s| {
            let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            Ok(OrbitComponent { lambda: parse_complex(s)?, center: 0.0, coeff: Complex64::from_polar(1.0, phase) })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rec = simulate_orbit(&m, &t, nu, &comps, steps, p)?;
    rec.seed = Some(ctx.cfg.seed);
    write_orbit_csv(ctx.file("orbit.csv")?, &rec)?;
    ctx.json("orbit.json", &rec)?;
    println!("orbit: {} norms, moduli {:?}", rec.norms.len(), rec.moduli);
    if let Some(n) = rec.stopped_at {
        println!("stopped at step {n}: norm exceeded 1e12");
    }
    Ok(())
}

fn read_c_list(path: &Path) -> Result<Vec<Complex64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read c list {}: {e}", path.display())))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(parse_complex)
        .collect()
}

fn cmd_heat_sweep(ctx: &Ctx, p: f64, t0: f64, c_list: &Path) -> Result<()> {
    let m = ctx.model()?;
    let cp = chaos_threshold(&m, p)?;
    let t = Multiplier::heat(t0)?;
    let cs = read_c_list(c_list)?;
    let mut out = String::from("c_re,c_im,c_p,above_threshold,s,t,verdict\n");
    for c in cs {
        let above = c.re > cp;
        let (s, tt, verdict) = if above {
            let l = solve_strip_parameter(&m, p, c)?;
            let nu = (-c * t0).exp();
            let cert = certify_mixing(&m, &t, nu, l, p)?;
            let v = serde_json::to_value(cert.verdict)?;
            (fmt17(l.re), fmt17(l.im), v.as_str().unwrap_or_default().to_string())
        } else {
            (String::new(), String::new(), String::new())
        };
        out.push_str(&format!("{},{},{},{above},{s},{tt},{verdict}\n", fmt17(c.re), fmt17(c.im), fmt17(cp)));
    }
    std::fs::write(ctx.out.join("heat_sweep.csv"), &out)?;
    print!("{out}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out)?;
    let ctx = Ctx { cfg, out };
    match &cli.command {
        Command::Model => cmd_model(&ctx),
        Command::Eigen { lambda, c_table } => cmd_eigen(&ctx, lambda, *c_table),
        Command::Transform { input, roundtrip } => cmd_transform(&ctx, input, *roundtrip),
        Command::Heat { t, kernel_out } => cmd_heat(&ctx, *t, kernel_out.as_deref()),
        Command::Certify { multiplier, p, lambda0, nu } => cmd_certify(&ctx, multiplier, *p, lambda0, nu.as_deref()),
        Command::Periodic { multiplier, rotation, p, lambda0, nu, center, verify } => {
            cmd_periodic(&ctx, multiplier, rotation, *p, lambda0, nu.as_deref(), *center, *verify)
        }
        Command::Orbit { multiplier, nu, steps, lambdas, p } => cmd_orbit(&ctx, multiplier, nu, *steps, lambdas, *p),
        Command::HeatSweep { p, t0, c_list } => cmd_heat_sweep(&ctx, *p, *t0, c_list),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(2)
        }
    }
}
