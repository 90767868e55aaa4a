use std::time::Instant;

use bayesopt::campaign::{best, case_study_space, run_test_function, CampaignConfig};
use bayesopt::testfuncs::TestFunction;

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let f = TestFunction::hartmann6d(0.1, false).unwrap();
    let t = Instant::now();
    let state = run_test_function(case_study_space(), CampaignConfig::case_study(), &f, seed, None).unwrap();
    let (x, y, i) = best(&state).unwrap();
    println!(
        "seed {seed}: best {y:.4} at evaluation {} x = {x:?} in {:.1?}",
        i + 1,
        t.elapsed()
    );
}
