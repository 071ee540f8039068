// Scratch probe for choosing experiment defaults. Not part of the build.

use dldl::experiment::{
    default_sweep_sigmas, run_comparison, sigma_sweep, CompareSettings, Method, Task,
};
use dldl::loss::LossKind;
use dldl::net::TrainConfig;
use dldl::synth::gen_age;

fn main() {
    let epochs: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(30);
    let lr: f64 = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.01);
    let noise: f64 = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let start = std::time::Instant::now();
    println!("== comparison probe, epochs={epochs} lr={lr} noise={noise}");
    for seed in [1u64, 2, 3, 4, 5] {
        let task = Task::Age(gen_age(1000, 500, 8, noise, seed).unwrap());
        let mut cfg = TrainConfig::new(LossKind::Kl, epochs, seed);
        cfg.learning_rate = lr;
        let settings = CompareSettings::new(cfg);
        let report =
            run_comparison(&task, &[Method::Dldl, Method::CConvNet], &settings).unwrap();
        let dldl_exp = report.row("dldl", "exp").unwrap().metrics.get("mae").unwrap();
        let cc_max = report.row("c-convnet", "max").unwrap().metrics.get("mae").unwrap();
        let dldl_e1 = report.curve("dldl").unwrap().history.epochs[0].train_mae.unwrap();
        let cc_e1 = report.curve("c-convnet").unwrap().history.epochs[0]
            .train_mae
            .unwrap();
        println!(
            "seed {seed}: dldl(exp) val {dldl_exp:.3} vs c-convnet(max) val {cc_max:.3} | epoch1 train {dldl_e1:.3} vs {cc_e1:.3}"
        );
    }
    println!("elapsed {:?}", start.elapsed());

    println!("== sweep probe");
    for decoder in ["max", "exp"] {
        for seed in [1u64, 2, 3] {
            let task = gen_age(1000, 500, 8, noise, seed).unwrap();
            let mut cfg = TrainConfig::new(LossKind::Kl, epochs, seed);
            cfg.learning_rate = lr;
            let mut settings = CompareSettings::new(cfg);
            settings.sweep_decoder = decoder.to_string();
            let curve = sigma_sweep(&task, &default_sweep_sigmas(1.0), &settings).unwrap();
            let vals: Vec<String> = curve
                .points
                .iter()
                .map(|p| format!("{:.2}:{:.3}", p.sigma, p.val_mae))
                .collect();
            println!("{decoder} seed {seed}: {}", vals.join("  "));
        }
    }
    println!("total elapsed {:?}", start.elapsed());
}
