use funres::diagnostics::fnfn;
use funres::models::fit;
use funres::residuals::residuals_for;
use funres::simulation::scenarios;

fn main() {
    // 200-seed pilot of the correctly specified fit per scenario:
    // distribution of the Fn-Fn sup deviation at the scenario's n
    for spec in scenarios() {
        let mut sups = Vec::new();
        let mut failures = 0;
        for seed in 0..200u64 {
            let mut rng = spec.stream(seed);
            let data = spec.generate(spec.n, &mut rng).unwrap();
            match fit(&spec.correct, &data) {
                Ok(model) => {
                    let set = residuals_for(&model, &data).unwrap();
                    sups.push(fnfn(&set.residuals).unwrap().sup_dev);
                }
                Err(_) => failures += 1,
            }
        }
        sups.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let max = sups.last().copied().unwrap_or(f64::NAN);
        let p50 = sups[sups.len() / 2];
        println!(
            "{:<22} median {:.4} max {:.4} failures {}",
            spec.name, p50, max, failures
        );
    }
}
