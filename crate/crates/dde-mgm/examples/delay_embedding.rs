//! Delay embedding basics: reconstructing recursive states from a series
//! and snapping them to grid cells.
//!
//! Run with: cargo run --example delay_embedding

use dde_mgm::{delay_embed, discretize, Series};

fn main() {
    // A period-4 wave. In the time domain it is an endless zig-zag; in the
    // embedding space it is four states visited over and over.
    let mut vals = Vec::new();
    for _ in 0..6 {
        vals.extend_from_slice(&[0.0, 1.0, 0.0, -1.0]);
    }
    let wave = Series::univariate(vals).unwrap();

    let states = delay_embed(&wave, 1, 2).unwrap();
    println!("delay embedding with s=1, d=2");
    println!("input samples:  {}", wave.len());
    println!("output states:  {}", states.len());

    let mut distinct: Vec<Vec<f64>> = Vec::new();
    for st in &states {
        if !distinct.iter().any(|c| c == st.coords()) {
            distinct.push(st.coords().to_vec());
        }
    }
    println!("distinct states: {} (the recursive pattern)", distinct.len());
    for st in &distinct {
        println!("  {st:?}");
    }

    // The trajectory cycles through them in order.
    print!("trajectory: ");
    for st in states.iter().take(8) {
        print!("({}, {}) -> ", st.coords()[0], st.coords()[1]);
    }
    println!("...");

    // Discretization maps nearby states to the same integer cell; cell 0
    // is centered on the origin and halves round away from zero.
    println!("\ndiscretization with cell size 0.5:");
    for coords in [[0.0, 0.0], [0.74, -0.26], [0.25, 0.25], [1.2, -0.9]] {
        let state = dde_mgm::EmbeddedState::new(coords.to_vec());
        let cell = discretize(&state, &[0.5, 0.5]);
        println!("  state {coords:?} -> cell ({cell})");
    }

    // A longer, noisier signal still occupies a bounded set of cells.
    let noisy: Vec<f64> = (0..400)
        .map(|i| {
            let t = i as f64 * std::f64::consts::TAU / 20.0;
            t.sin() + 0.02 * ((i * 7919) % 13) as f64 / 13.0
        })
        .collect();
    let noisy = Series::univariate(noisy).unwrap();
    let states = delay_embed(&noisy, 5, 2).unwrap();
    let cells: std::collections::HashSet<_> = states
        .iter()
        .map(|st| discretize(st, &[0.1, 0.1]))
        .collect();
    println!(
        "\nnoisy sinusoid: {} states fall into {} grid cells",
        states.len(),
        cells.len()
    );
}
