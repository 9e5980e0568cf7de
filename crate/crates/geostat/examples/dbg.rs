use geostat::data::{split_811, synth_gaussian_field, BoundingBox};
use geostat::metrics::regression_metrics;
use geostat::pipeline::run_kriging;
use geostat::presets::kriging_preset;
use geostat::spatial::{Point2, PointSet};
use geostat::variogram::{VariogramKind, VariogramSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn run_case(n: usize, zscale: f64, tau: impl Fn(&Point2) -> f64, label: &str) {
    let domain = BoundingBox::unit();
    let mut wins = 0; let mut detail = String::new();
    for seed in 0..5u64 {
        let base = VariogramSpec::new(VariogramKind::Exponential, 0.02, 1.0, 0.12).unwrap();
        let f = synth_gaussian_field(n, &base, domain, 2000 + seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + seed);
        let coords = f.dataset.coords.clone();
        let values: Vec<f64> = f.dataset.target.iter().zip(&coords).map(|(&z, c)| {
            (zscale * z + tau(c) * normal(&mut rng)).exp()
        }).collect();
        let ps = PointSet::new(coords.clone(), values.clone()).unwrap();
        let split = split_811(n, seed).unwrap();
        let train = ps.subset(&split.train).unwrap();
        let targets: Vec<Point2> = split.test.iter().map(|&i| coords[i]).collect();
        let obs: Vec<f64> = split.test.iter().map(|&i| values[i]).collect();
        let mut rm = vec![];
        for name in ["original", "geoevolve"] {
            let preset = kriging_preset(name).unwrap();
            match run_kriging(&preset, &train, &targets, seed) {
                Ok(run) => {
                    let pred: Vec<f64> = run.predictions.iter().map(|p| p.value).collect();
                    rm.push(regression_metrics(&pred, &obs).unwrap().rmse);
                }
                Err(e) => { detail.push_str(&format!(" s{seed}ERR:{e}")); rm.push(f64::INFINITY); }
            }
        }
        detail.push_str(&format!(" s{seed}:{:.3}/{:.3}", rm[0], rm[1]));
        if rm[1] <= rm[0] { wins += 1; }
    }
    println!("{label}: wins={wins}/5 {detail}");
}

fn main() {
    run_case(400, 1.6, |c| 0.05 + 0.15 * c.x, "z1.6 tau=.05+.15x");
    run_case(400, 2.0, |c| 0.05 + 0.25 * c.x, "z2.0 tau=.05+.25x");
    run_case(400, 1.2, |c| 0.02 + 0.10 * c.x, "z1.2 tau=.02+.10x");
    run_case(400, 2.4, |c| 0.05 + 0.30 * c.x, "z2.4 tau=.05+.30x");
}
