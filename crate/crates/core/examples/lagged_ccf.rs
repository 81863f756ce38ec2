//! Cross-correlation by lag and delay detection on two series where the
//! second trails the first by three days with the sign flipped.

use coupling::correlate::{ccf, detect_delay};
use coupling::series::Observation;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let driver: Vec<f64> = (0..200).map(|_| normal.sample(&mut rng)).collect();
    let social: Vec<Observation> = driver[3..].iter().copied().map(Observation::present).collect();
    let calls: Vec<Observation> =
        driver[..197].iter().map(|v| Observation::present(-v + 0.3 * normal.sample(&mut rng))).collect();

    let table = ccf(&social, &calls, 7, 8).unwrap();
    for entry in &table.entries {
        let bar = "#".repeat((entry.correlation.abs() * 40.0) as usize);
        println!("{:>3} {:+.3} {bar}", entry.lag, entry.correlation);
    }
    let lag = detect_delay(&table).unwrap();
    println!(
        "\ndelay h = {} ({:?}, {:?}, peak {:+.3}); negative h means social leads call",
        lag.delay, lag.lead_lag, lag.sign, lag.peak_correlation
    );
}
