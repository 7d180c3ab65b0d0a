//! Scratch probe: noiseless multi-user receive geometry. Not shipped.

use nalgebra::DVector;
use num_complex::Complex64;
use onebit_miso::constellation::{bits_to_symbols, Qam16Symbol, QpskSymbol};
use onebit_miso::lut::build_luts;
use onebit_miso::mber::SolverConfig;
use onebit_miso::receiver::{detect, estimate_gain};
use onebit_miso::rng::{rng_from_seed, stream_rng, StreamKind};
use onebit_miso::sim::draw_channel;
use rand::Rng;

#[test]
#[ignore]
fn probe_multiuser_geometry() {
    let (m, n) = (3usize, 150usize);
    let mut rng = rng_from_seed(99);
    let channel = draw_channel(&mut rng, m, n).unwrap();
    let pair = build_luts(&channel, &SolverConfig::default()).unwrap();
    let h = channel.matrix();

    let mut bit_rng = stream_rng(7, 0, StreamKind::Payload);
    let mut samples: Vec<Vec<Complex64>> = vec![Vec::new(); m];
    let mut sent: Vec<Vec<Qam16Symbol>> = vec![Vec::new(); m];
    for _ in 0..2000 {
        let bits: Vec<bool> = (0..4 * m).map(|_| bit_rng.random()).collect();
        let symbols = bits_to_symbols(&bits).unwrap();
        let x = pair.map_symbols(&symbols).unwrap();
        let xv = DVector::from_iterator(n, x.iter().map(|q| q.value()));
        let r = h * &xv;
        for u in 0..m {
            samples[u].push(r[u]);
            sent[u].push(symbols[u]);
        }
    }
    for u in 0..m {
        let g = estimate_gain(&samples[u]).unwrap();
        let mut errors = 0;
        let mut quadrant_errors = 0;
        let mut offset_errors = 0;
        for (y, s) in samples[u].iter().zip(&sent[u]) {
            let det = detect(y * g);
            if det != *s {
                errors += 1;
            }
            if det.quadrant() != s.quadrant() {
                quadrant_errors += 1;
            }
            if det.offset() != s.offset() {
                offset_errors += 1;
            }
        }
        println!(
            "user {u}: g={g:.4} symbol errors {errors}/2000 (quadrant {quadrant_errors}, offset {offset_errors})"
        );
        let mut seen = std::collections::HashMap::new();
        for (y, s) in samples[u].iter().zip(&sent[u]) {
            seen.entry((s.quadrant().index(), s.offset().index()))
                .or_insert_with(Vec::new)
                .push(y * g);
        }
        let mut keys: Vec<_> = seen.keys().copied().collect();
        keys.sort();
        for key in keys.iter().take(4) {
            let pts = &seen[key];
            let mean = pts.iter().sum::<Complex64>() / pts.len() as f64;
            let spread = pts
                .iter()
                .map(|p| (p - mean).norm())
                .fold(0.0f64, f64::max);
            let ideal =
                Qam16Symbol::new(QpskSymbol::from_index(key.0), QpskSymbol::from_index(key.1))
                    .value();
            println!(
                "  sym {:?}: ideal ({:.2},{:.2}) cluster mean ({:.2},{:.2}) max-dev {:.3}",
                key, ideal.re, ideal.im, mean.re, mean.im, spread
            );
        }
    }
}
