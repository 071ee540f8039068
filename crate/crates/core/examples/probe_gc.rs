// Scratch probe: gradcheck timing at acceptance scale.
fn main() {
    let start = std::time::Instant::now();
    let report = dldl::gradcheck::run_gradcheck(2024, 100, 100).unwrap();
    for e in &report.entries {
        println!("{}: cases {}, max rel err {:.3e}, pass {}", e.name, e.cases, e.max_rel_error, e.pass);
    }
    println!("elapsed {:?}", start.elapsed());
}
