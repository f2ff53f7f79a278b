//! Experiment driver behind the `skelkit` binary.
//!
//! CSV columns, in order: `N,Kr,Kc,Tcm,Tlu,Tsv,Tmv,E,M,iters`. Times are
//! wall-clock seconds, `E` is a relative error, `M` is the serialized size of
//! the compressed matrix in megabytes (10⁶ bytes). Columns that do not apply
//! to an experiment are left empty.

use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bie::{discretize_dirichlet, eval_interior, point_source_data, scattering_system, Curve2D, Quadrature};
use crate::error::{invalid, Error, Result};
use crate::geom::{build_tree, shapes, PointSet};
use crate::kernels::{Equation, KernelSpec};
use crate::linalg::{norm2, rel_diff};
use crate::scalar::Scalar;
use crate::skel::{compress, CompressOptions, CompressedMatrix, KernelMatrix, KernelOperator, Mode};
use crate::solver::{assemble_embedding, export_matrix_market, factor_with, gmres, FactorOptions, GmresError};

/// Above this size the dense reference matvec is skipped.
pub const DENSE_ORACLE_LIMIT: usize = 4096;

pub const CSV_HEADER: [&str; 10] = ["N", "Kr", "Kc", "Tcm", "Tlu", "Tsv", "Tmv", "E", "M", "iters"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    /// Compression and fast matvec against a dense reference.
    ApplyBench,
    /// Compression, factorization and solve of an interior Dirichlet problem.
    SolveBench,
    /// Two-body scattering with and without the block preconditioner.
    ScatterDemo,
    /// Compression timings only, for scaling fits.
    Sweep,
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "apply_bench" => Ok(Self::ApplyBench),
            "solve_bench" => Ok(Self::SolveBench),
            "scatter_demo" => Ok(Self::ScatterDemo),
            "sweep" => Ok(Self::Sweep),
            other => invalid(format!("unknown experiment {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Geometry {
    /// Unit circle.
    Circle,
    /// Uniform random points in the unit square.
    Square,
    /// Unit sphere.
    Sphere,
    /// Uniform random points in the unit cube.
    Cube,
    Ellipse { a: f64, b: f64 },
    /// Two three-lobed bodies separated by a gap of `delta` times one body's
    /// diameter.
    TrefoilScatterers { delta: f64 },
}

impl FromStr for Geometry {
    type Err = Error;

    /// `circle`, `square`, `sphere`, `cube`, `ellipse[:a,b]`,
    /// `trefoil_scatterers[:delta]`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let nums = |a: Option<&str>| -> Result<Vec<f64>> {
            a.map(|a| {
                a.split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|e| Error::InvalidInput(format!("bad geometry argument {t:?}: {e}"))))
                    .collect()
            })
            .unwrap_or(Ok(Vec::new()))
        };
        let g = match (name, nums(args)?.as_slice()) {
            ("circle", []) => Self::Circle,
            ("square", []) => Self::Square,
            ("sphere", []) => Self::Sphere,
            ("cube", []) => Self::Cube,
            ("ellipse", []) => Self::Ellipse { a: 2.0, b: 1.0 },
            ("ellipse", &[a, b]) => Self::Ellipse { a, b },
            ("trefoil_scatterers", []) => Self::TrefoilScatterers { delta: 0.5 },
            ("trefoil_scatterers", &[delta]) => Self::TrefoilScatterers { delta },
            _ => return invalid(format!("unknown geometry {s:?}")),
        };
        Ok(g)
    }
}

impl Geometry {
    fn dim(&self) -> usize {
        match self {
            Self::Sphere | Self::Cube => 3,
            _ => 2,
        }
    }

    fn points(&self, n: usize, seed: u64) -> Result<PointSet> {
        Ok(match *self {
            Self::Circle => shapes::circle(n),
            Self::Square => shapes::square(n, seed),
            Self::Sphere => shapes::sphere(n),
            Self::Cube => shapes::cube(n, seed),
            Self::Ellipse { a, b } => Curve2D::ellipse(a, b, [0.0, 0.0], n)?.points().clone(),
            Self::TrefoilScatterers { .. } => {
                let bodies = self.scatterers(n / 2)?;
                let mut c = bodies[0].points().coords().to_vec();
                c.extend_from_slice(bodies[1].points().coords());
                PointSet::new(2, c)?
            }
        })
    }

    fn curve(&self, n: usize) -> Result<Curve2D> {
        match *self {
            Self::Circle => Curve2D::circle(1.0, [0.0, 0.0], n),
            Self::Ellipse { a, b } => Curve2D::ellipse(a, b, [0.0, 0.0], n),
            _ => invalid(format!("{self:?} is not a single closed curve")),
        }
    }

    fn scatterers(&self, n: usize) -> Result<Vec<Curve2D>> {
        let Self::TrefoilScatterers { delta } = *self else {
            return invalid(format!("{self:?} is not a scatterer configuration"));
        };
        if !(delta > 0.0 && delta.is_finite()) {
            return invalid(format!("scatterer gap must be positive, got {delta}"));
        }
        // Unit-scale bodies reach radius 1/2, so their diameter is 1.
        let c = 0.5 + delta / 2.0;
        Ok(vec![
            Curve2D::trefoil([-c, 0.0], 1.0, 0.0, n)?,
            Curve2D::trefoil([c, 0.0], 1.0, PI / 3.0, n)?,
        ])
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub geometry: Geometry,
    pub ns: Vec<usize>,
    pub eps: f64,
    /// Kernel name as accepted by [`KernelSpec::parse`].
    pub kernel: String,
    /// Problem size in wavelengths, `ω = k·diam/(2π)`. For scatterers the
    /// diameter is that of one body.
    pub omega: f64,
    pub seed: u64,
    pub mode: Mode,
    pub regularize: Option<f64>,
    pub leaf_size: usize,
    /// GMRES tolerance for the scattering demo.
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub export_mm: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(experiment: Experiment, geometry: Geometry, ns: Vec<usize>) -> Self {
        Self {
            experiment,
            geometry,
            ns,
            eps: 1e-9,
            kernel: "laplace2d".into(),
            omega: 0.0,
            seed: 0,
            mode: Mode::Proxy,
            regularize: None,
            leaf_size: 64,
            tol: 1e-6,
            out: None,
            export_mm: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ns.is_empty() || self.ns[0] == 0 || self.ns.windows(2).any(|w| w[0] >= w[1]) {
            return invalid(format!("N values must be positive and increasing, got {:?}", self.ns));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return invalid(format!("eps must lie in (0, 1), got {}", self.eps));
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return invalid(format!("omega must be nonnegative, got {}", self.omega));
        }
        if self.leaf_size == 0 {
            return invalid("leaf size must be positive");
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return invalid(format!("tolerance must lie in (0, 1), got {}", self.tol));
        }
        self.spec(1.0).map(|_| ())
    }

    /// Kernel for a geometry of the given diameter.
    fn spec(&self, diameter: f64) -> Result<KernelSpec> {
        let base = KernelSpec::parse(&self.kernel, 1.0)?;
        match base.equation {
            Equation::Laplace => KernelSpec::parse(&self.kernel, 0.0),
            Equation::Helmholtz => {
                if self.omega <= 0.0 {
                    return invalid("Helmholtz kernels need omega > 0");
                }
                KernelSpec::parse(&self.kernel, 2.0 * PI * self.omega / diameter)
            }
        }
    }

    fn compress_options(&self) -> CompressOptions {
        let mut o = CompressOptions::new(self.eps).mode(self.mode);
        o.seed = self.seed;
        o
    }

    fn mm_path(&self, n: usize) -> Option<PathBuf> {
        let p = self.export_mm.as_ref()?;
        if self.ns.len() == 1 {
            return Some(p.clone());
        }
        let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let ext = p.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
        Some(p.with_file_name(format!("{stem}_{n}{ext}")))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchRecord {
    pub n: usize,
    pub kr: usize,
    pub kc: usize,
    pub t_cm: f64,
    pub t_lu: Option<f64>,
    pub t_sv: Option<f64>,
    pub t_mv: Option<f64>,
    pub e: Option<f64>,
    pub m: Option<f64>,
    pub iters: Option<usize>,
    /// Unpreconditioned GMRES count in the scattering demo (not written to CSV).
    pub iters_plain: Option<usize>,
}

impl BenchRecord {
    fn csv_row(&self) -> [String; 10] {
        let f = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_default();
        [
            self.n.to_string(),
            self.kr.to_string(),
            self.kc.to_string(),
            format!("{:.6e}", self.t_cm),
            f(self.t_lu),
            f(self.t_sv),
            f(self.t_mv),
            f(self.e),
            f(self.m),
            self.iters.map(|i| i.to_string()).unwrap_or_default(),
        ]
    }
}

pub fn write_csv<W: Write>(records: &[BenchRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record(r.csv_row()).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Least-squares slope of `log t` against `log n`, dropping the smallest `n`.
pub fn fit_exponent(points: &[(usize, f64)]) -> Result<f64> {
    if points.len() < 4 {
        return invalid(format!("need at least 4 points for a fit, got {}", points.len()));
    }
    if points.windows(2).any(|w| w[0].0 >= w[1].0) {
        return invalid("N values must be increasing");
    }
    if points.iter().any(|&(n, t)| n == 0 || !(t > 0.0 && t.is_finite())) {
        return invalid("sizes and times must be positive");
    }
    let xy: Vec<(f64, f64)> = points[1..].iter().map(|&(n, t)| ((n as f64).ln(), t.ln())).collect();
    let m = xy.len() as f64;
    let (mx, my) = (xy.iter().map(|p| p.0).sum::<f64>() / m, xy.iter().map(|p| p.1).sum::<f64>() / m);
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

/// Compression-time exponent over a set of records.
pub fn fit_compression_exponent(records: &[BenchRecord]) -> Result<f64> {
    fit_exponent(&records.iter().map(|r| (r.n, r.t_cm)).collect::<Vec<_>>())
}

/// Runs the configured experiment for each `N` and writes the CSV if asked.
pub fn run(config: &RunConfig) -> Result<Vec<BenchRecord>> {
    config.validate()?;
    let mut records = Vec::with_capacity(config.ns.len());
    for &n in &config.ns {
        let rec = match config.experiment {
            Experiment::ApplyBench => apply_bench(config, n, true)?,
            Experiment::Sweep => apply_bench(config, n, false)?,
            Experiment::SolveBench => solve_bench(config, n)?,
            Experiment::ScatterDemo => scatter_demo(config, n)?,
        };
        log::info!("{rec:?}");
        records.push(rec);
    }
    if let Some(path) = &config.out {
        write_csv(&records, std::fs::File::create(path)?)?;
    }
    Ok(records)
}

fn median3(mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let mut t = [0.0; 3];
    for s in &mut t {
        let start = Instant::now();
        f()?;
        *s = start.elapsed().as_secs_f64();
    }
    t.sort_by(f64::total_cmp);
    Ok(t[1])
}

fn random_vec<T: Scalar>(n: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| T::from_parts(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

fn timed_compress<T: Scalar, M: KernelMatrix<T>>(config: &RunConfig, mat: &M) -> Result<(CompressedMatrix<T>, f64)> {
    let start = Instant::now();
    let tree = build_tree(mat.points(), config.leaf_size)?;
    let cm = compress(mat, &tree, &config.compress_options())?;
    Ok((cm, start.elapsed().as_secs_f64()))
}

fn export<T: Scalar>(config: &RunConfig, n: usize, cm: &CompressedMatrix<T>) -> Result<()> {
    if let Some(path) = config.mm_path(n) {
        export_matrix_market(&assemble_embedding(cm), path)?;
    }
    Ok(())
}

fn apply_bench(config: &RunConfig, n: usize, with_error: bool) -> Result<BenchRecord> {
    let pts = config.geometry.points(n, config.seed)?;
    let spec = config.spec(pts.diameter())?;
    if spec.dim != config.geometry.dim() {
        return invalid(format!("{}D kernel on {}D geometry", spec.dim, config.geometry.dim()));
    }
    let op = KernelOperator::new(spec, pts)?;
    if spec.is_complex() {
        apply_generic::<Complex64>(config, n, &op, with_error)
    } else {
        apply_generic::<f64>(config, n, &op, with_error)
    }
}

fn apply_generic<T: Scalar>(config: &RunConfig, n: usize, op: &KernelOperator, with_error: bool) -> Result<BenchRecord> {
    let (cm, t_cm) = timed_compress::<T, _>(config, op)?;
    let x = random_vec::<T>(n, config.seed);
    let t_mv = median3(|| cm.apply(&x).map(|_| ()))?;
    let e = if with_error && n <= DENSE_ORACLE_LIMIT {
        let y = cm.apply(&x)?;
        let exact = dense_matvec(op, &x);
        Some(rel_diff(&y, &exact))
    } else {
        None
    };
    export(config, n, &cm)?;
    Ok(BenchRecord {
        n,
        kr: cm.k_rows(),
        kc: cm.k_cols(),
        t_cm,
        t_mv: Some(t_mv),
        e,
        m: Some(cm.storage_mb()),
        ..Default::default()
    })
}

/// `A x` one row block at a time, without storing `A`.
fn dense_matvec<T: Scalar, M: KernelMatrix<T>>(op: &M, x: &[T]) -> Vec<T> {
    use rayon::prelude::*;
    let n = op.size();
    let all: Vec<usize> = (0..n).collect();
    let chunks: Vec<Vec<usize>> = all.chunks(256).map(|c| c.to_vec()).collect();
    chunks.par_iter().flat_map_iter(|rows| op.entries(rows, &all).matvec(x)).collect()
}

fn solve_bench(config: &RunConfig, n: usize) -> Result<BenchRecord> {
    let curve = config.geometry.curve(n)?;
    let spec = config.spec(curve.diameter())?;
    if spec.dim != 2 {
        return invalid("the solve benchmark uses planar kernels");
    }
    let quad = match spec.equation {
        Equation::Laplace => Quadrature::PlainTrapezoid,
        Equation::Helmholtz => Quadrature::KapurRokhlin10,
    };
    let sys = discretize_dirichlet(&curve, &spec, quad)?;
    if spec.is_complex() {
        solve_generic::<Complex64>(config, n, &curve, &spec, &sys)
    } else {
        solve_generic::<f64>(config, n, &curve, &spec, &sys)
    }
}

/// Exterior source and interior checkpoint for a curve centered at the origin.
fn source_and_checkpoint(curve: &Curve2D) -> ([f64; 2], [f64; 2]) {
    let [[x0, y0], [x1, y1]] = curve.bounding_box();
    ([1.5 * x1 - 0.5 * x0, 1.5 * y1 - 0.5 * y0], [0.2 * x1, -0.3 * y1])
}

fn solve_generic<T: Scalar>(
    config: &RunConfig,
    n: usize,
    curve: &Curve2D,
    spec: &KernelSpec,
    sys: &crate::bie::BieSystem,
) -> Result<BenchRecord> {
    let (cm, t_cm) = timed_compress::<T, _>(config, sys)?;
    let start = Instant::now();
    let fi = factor_with(
        &cm,
        &FactorOptions {
            regularize: config.regularize,
        },
    )?;
    let t_lu = start.elapsed().as_secs_f64();
    let (source, checkpoint) = source_and_checkpoint(curve);
    let f: Vec<T> = point_source_data(curve, source, 1.0, spec)?;
    let t_sv = median3(|| fi.solve(&f).map(|_| ()))?;
    let t_mv = median3(|| cm.apply(&f).map(|_| ()))?;
    let sigma = fi.solve(&f)?;
    let u = eval_interior(curve, &sigma, spec, &[checkpoint])?;
    let exact = spec.with_layer(crate::kernels::Layer::Single).value(&checkpoint, None, &source, None);
    let (re, im) = u.values[0].to_parts();
    let e = (Complex64::new(re, im) - exact).norm() / exact.norm();
    export(config, n, &cm)?;
    Ok(BenchRecord {
        n,
        kr: cm.k_rows(),
        kc: cm.k_cols(),
        t_cm,
        t_lu: Some(t_lu),
        t_sv: Some(t_sv),
        t_mv: Some(t_mv),
        e: Some(e),
        m: Some(cm.storage_mb()),
        ..Default::default()
    })
}

/// Exterior point used to compare scattered fields.
pub const SCATTER_CHECKPOINT: [f64; 2] = [0.3, 2.5];

fn scatter_demo(config: &RunConfig, n: usize) -> Result<BenchRecord> {
    let bodies = config.geometry.scatterers(n)?;
    let spec = config.spec(bodies[0].diameter())?;
    if spec.equation != Equation::Helmholtz || spec.dim != 2 {
        return invalid("the scattering demo needs the helmholtz2d kernel");
    }
    let sys = scattering_system(&bodies, spec.wavenumber)?;
    let (cm, t_cm) = timed_compress::<Complex64, _>(config, &sys)?;
    let start = Instant::now();
    let pc = sys.precond_blocks(&config.compress_options(), config.leaf_size)?;
    let t_lu = start.elapsed().as_secs_f64();
    let b = sys.plane_wave_neumann_rhs();
    let apply = |v: &[Complex64]| cm.apply(v).expect("length matches");
    let max_iter = 2 * b.len();
    let unwrap_gmres = |r: std::result::Result<_, GmresError<Complex64>>| r.map_err(Error::from);

    let plain = unwrap_gmres(gmres(apply, &b, config.tol, max_iter, None::<fn(&[Complex64]) -> Vec<Complex64>>))?;
    let start = Instant::now();
    let pre = unwrap_gmres(gmres(apply, &b, config.tol, max_iter, Some(|v: &[Complex64]| pc.apply(v).expect("length matches"))))?;
    let t_sv = start.elapsed().as_secs_f64();

    let u_plain = sys.eval_single_layer(&plain.x, &[SCATTER_CHECKPOINT])?[0];
    let u_pre = sys.eval_single_layer(&pre.x, &[SCATTER_CHECKPOINT])?[0];
    let e = (u_plain - u_pre).norm() / u_plain.norm().max(f64::MIN_POSITIVE);
    let t_mv = median3(|| cm.apply(&b).map(|_| ()))?;
    export(config, n, &cm)?;
    log::info!(
        "scattering N = {}: {} unpreconditioned vs {} preconditioned iterations, residual {:.2e}",
        b.len(),
        plain.iterations,
        pre.iterations,
        norm2(&b) * pre.residual
    );
    Ok(BenchRecord {
        n: b.len(),
        kr: cm.k_rows(),
        kc: cm.k_cols(),
        t_cm,
        t_lu: Some(t_lu),
        t_sv: Some(t_sv),
        t_mv: Some(t_mv),
        e: Some(e),
        m: Some(cm.storage_mb()),
        iters: Some(pre.iterations),
        iters_plain: Some(plain.iterations),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_of_power_laws() {
        for p in [1.0, 1.5] {
            let pts: Vec<(usize, f64)> = [1024usize, 2048, 4096, 8192].iter().map(|&n| (n, 3e-7 * (n as f64).powf(p))).collect();
            assert!((fit_exponent(&pts).unwrap() - p).abs() < 0.01);
        }
        assert!(fit_exponent(&[(1, 1.0), (2, 2.0), (3, 3.0)]).is_err());
        assert!(fit_exponent(&[(1, 1.0), (3, 2.0), (2, 3.0), (4, 4.0)]).is_err());
    }

    #[test]
    fn parses_names() {
        assert_eq!("ellipse:3,1".parse::<Geometry>().unwrap(), Geometry::Ellipse { a: 3.0, b: 1.0 });
        assert_eq!("trefoil_scatterers".parse::<Geometry>().unwrap(), Geometry::TrefoilScatterers { delta: 0.5 });
        assert!("blob".parse::<Geometry>().is_err());
        assert!("ellipse:1".parse::<Geometry>().is_err());
        assert_eq!("solve_bench".parse::<Experiment>().unwrap(), Experiment::SolveBench);
    }

    #[test]
    fn validates_config() {
        let mut c = RunConfig::new(Experiment::ApplyBench, Geometry::Circle, vec![256, 128]);
        assert!(c.validate().is_err());
        c.ns = vec![128, 256];
        c.validate().unwrap();
        c.eps = 1.5;
        assert!(c.validate().is_err());
        c.eps = 1e-6;
        c.kernel = "helmholtz2d".into();
        assert!(c.validate().is_err());
        c.omega = 2.0;
        c.validate().unwrap();
        assert!((c.spec(2.0).unwrap().wavenumber - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn csv_has_empty_absent_columns() {
        let r = BenchRecord {
            n: 64,
            kr: 10,
            kc: 10,
            t_cm: 0.5,
            e: Some(1e-9),
            ..Default::default()
        };
        let mut buf = Vec::new();
        write_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("N,Kr,Kc,Tcm,Tlu,Tsv,Tmv,E,M,iters"));
        assert_eq!(lines.next(), Some("64,10,10,5.000000e-1,,,,1.000000e-9,,"));
    }

    #[test]
    fn small_runs_are_reproducible() {
        let mut c = RunConfig::new(Experiment::ApplyBench, Geometry::Circle, vec![256, 512]);
        c.eps = 1e-8;
        let a = run(&c).unwrap();
        let b = run(&c).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!((x.kr, x.kc, x.e), (y.kr, y.kc, y.e));
            assert!(x.e.unwrap() < 1e-6);
            assert!(x.t_lu.is_none() && x.iters.is_none());
        }
        let mut s = RunConfig::new(Experiment::SolveBench, Geometry::Ellipse { a: 2.0, b: 1.0 }, vec![256]);
        s.eps = 1e-10;
        let r = &run(&s).unwrap()[0];
        assert!(r.e.unwrap() < 1e-8, "{:?}", r.e);
        assert!(r.t_lu.is_some() && r.t_sv.is_some());
        s.geometry = Geometry::Square;
        assert!(run(&s).is_err());
    }
}
