// Scratch probe: full method list on all four tasks at desk defaults.

use dldl::experiment::{rows_to_csv, run_comparison, CompareSettings, Method, Task};
use dldl::label_space::LabelGrid2D;
use dldl::loss::LossKind;
use dldl::net::TrainConfig;
use dldl::synth::{gen_age, gen_multilabel, gen_pose, gen_seg};

fn settings(epochs: usize, seed: u64) -> CompareSettings {
    let mut cfg = TrainConfig::new(LossKind::Kl, epochs, seed);
    cfg.learning_rate = 0.1;
    CompareSettings::new(cfg)
}

fn main() {
    let start = std::time::Instant::now();

    let task = Task::Age(gen_age(1000, 500, 8, 1.5, 1).unwrap());
    let report = run_comparison(&task, &Method::ALL, &settings(80, 1)).unwrap();
    println!("== age\n{}", rows_to_csv(&report));
    println!("elapsed {:?}", start.elapsed());

    let grid = LabelGrid2D::square_range(-90.0, 90.0, 15.0).unwrap();
    let task = Task::Pose(gen_pose(800, 400, &grid, 8, 1).unwrap());
    let report = run_comparison(&task, &Method::ALL, &settings(80, 1)).unwrap();
    println!("== pose\n{}", rows_to_csv(&report));
    println!("elapsed {:?}", start.elapsed());

    let ml_methods = [
        Method::Dldl,
        Method::CConvNet,
        Method::ConvNetLs,
        Method::ConvNetAlphaDiv,
    ];
    let task = Task::MultiLabel(gen_multilabel(800, 400, 10, 16, 1).unwrap());
    let report = run_comparison(&task, &ml_methods, &settings(60, 1)).unwrap();
    println!("== multilabel\n{}", rows_to_csv(&report));
    println!("elapsed {:?}", start.elapsed());

    let task = Task::Seg(gen_seg(16, 8, 24, 24, 3, 1).unwrap());
    let report = run_comparison(&task, &ml_methods, &settings(30, 1)).unwrap();
    println!("== seg\n{}", rows_to_csv(&report));
    println!("total elapsed {:?}", start.elapsed());
}
