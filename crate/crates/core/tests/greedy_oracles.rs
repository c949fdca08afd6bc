//! Brute-force oracles for the greedy direction sweeps: exhaustive ordered
//! selection at desk scale, and direct matrix inversion against the
//! rank-one update and downdate recursions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use swarm_mimo::array::ArrayGeometry;
use swarm_mimo::metrics::{channel_matrix, sic_sum_capacity, tin_sum_rate, SwarmFormation, UavPlacement};
use swarm_mimo::{greedy_directions_sic, greedy_directions_tin, Direction, DirectionCodebook, GreedyState};

const ORACLE_TIE_TOL: f64 = 1e-9;

/// Nine fixed azimuth sines for a four-element array: the four mutually
/// non-interfering columns plus five fillers, in codebook order.
fn desk_codebook() -> DirectionCodebook {
    let sines = [-0.5, -0.3, -0.1, 0.0, 0.2, 0.5, 0.7, 0.9, 1.0];
    let dirs = sines
        .iter()
        .map(|&s| Direction::from_sines(0.0, s).unwrap())
        .collect();
    DirectionCodebook::from_directions(dirs).unwrap()
}

fn formation(dirs: &[Direction], range: f64, p_bar: f64) -> SwarmFormation {
    let placements = dirs
        .iter()
        .map(|d| UavPlacement::new(range, *d).unwrap())
        .collect();
    SwarmFormation::uniform_snr(placements, p_bar).unwrap()
}

/// Best ordered selection of `k` codebook entries under `rate`, scanning
/// every sequence with repetition; among sequences within the tie
/// tolerance of the best value, the lexicographically smallest index
/// sequence wins, mirroring the sweep's lowest-index tie-break.
fn exhaustive_ordered_best(
    cb: &DirectionCodebook,
    k: usize,
    rate: impl Fn(&[Direction]) -> f64,
) -> (Vec<usize>, f64) {
    let n = cb.len();
    let total = n.pow(k as u32);
    let mut best_value = f64::NEG_INFINITY;
    let mut values = Vec::with_capacity(total);
    for flat in 0..total {
        let mut seq = Vec::with_capacity(k);
        let mut rest = flat;
        for _ in 0..k {
            seq.push(rest % n);
            rest /= n;
        }
        seq.reverse();
        let dirs: Vec<Direction> = seq.iter().map(|&i| cb.directions()[i]).collect();
        let value = rate(&dirs);
        best_value = best_value.max(value);
        values.push((seq, value));
    }
    let threshold = best_value - ORACLE_TIE_TOL * best_value.abs().max(1.0);
    let winner = values
        .into_iter()
        .filter(|(_, v)| *v >= threshold)
        .map(|(seq, _)| seq)
        .min()
        .unwrap();
    (winner, best_value)
}

fn codebook_index(cb: &DirectionCodebook, d: &Direction) -> usize {
    cb.directions()
        .iter()
        .position(|c| {
            (c.sin_theta() - d.sin_theta()).abs() <= 1e-12
                && (c.sin_phi() - d.sin_phi()).abs() <= 1e-12
        })
        .unwrap()
}

#[test]
fn sic_sweep_matches_exhaustive_ordered_selection() {
    let g = ArrayGeometry::ula(4).unwrap();
    let cb = desk_codebook();
    let k = 3;
    let p_bar = 5.0;
    let ranges = [100.0; 3];
    let snrs = [p_bar; 3];

    let (oracle_seq, oracle_value) = exhaustive_ordered_best(&cb, k, |dirs| {
        let f = formation(dirs, 100.0, p_bar);
        let h = channel_matrix(&g, &f, 100.0).unwrap();
        sic_sum_capacity(&h, f.ref_snrs()).unwrap()
    });

    let out = greedy_directions_sic(&g, &cb, &ranges, &snrs, 0.0, f64::INFINITY).unwrap();
    let greedy_seq: Vec<usize> = out
        .order
        .iter()
        .map(|&u| codebook_index(&cb, &out.directions[u]))
        .collect();

    assert_eq!(greedy_seq, oracle_seq);
    assert!((out.objective - oracle_value).abs() <= 1e-9);
    // The family of four mutually non-interfering columns sits at indices
    // 0, 3, 5, 8; the tie-break lands on the first three.
    assert_eq!(oracle_seq, vec![0, 3, 5]);
}

#[test]
fn tin_sweep_matches_exhaustive_ordered_selection() {
    let g = ArrayGeometry::ula(4).unwrap();
    let cb = desk_codebook();
    let k = 3;
    let p_bar = 5.0;
    let ranges = [100.0; 3];
    let snrs = [p_bar; 3];

    let (oracle_seq, oracle_value) = exhaustive_ordered_best(&cb, k, |dirs| {
        let f = formation(dirs, 100.0, p_bar);
        let h = channel_matrix(&g, &f, 100.0).unwrap();
        tin_sum_rate(&h, f.ref_snrs()).unwrap()
    });

    let out = greedy_directions_tin(&g, &cb, &ranges, &snrs, 0.0, f64::INFINITY).unwrap();
    let greedy_seq: Vec<usize> = out
        .order
        .iter()
        .map(|&u| codebook_index(&cb, &out.directions[u]))
        .collect();

    assert_eq!(greedy_seq, oracle_seq);
    assert!((out.objective - oracle_value).abs() <= 1e-9);
    assert_eq!(oracle_seq, vec![0, 3, 5]);
}

#[test]
fn recursions_match_direct_inversion_over_random_sequences() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e3779b97f4a7c15);
    let mut worst_update = 0.0f64;
    let mut worst_downdate = 0.0f64;

    for _ in 0..200 {
        let m = rng.gen_range(2..=16usize);
        let k = rng.gen_range(1..=m);
        let g = ArrayGeometry::ula(m).unwrap();
        let mut state = GreedyState::new(m);
        let mut load = DMatrix::<Complex64>::identity(m, m);
        let mut users: Vec<(DVector<Complex64>, f64)> = Vec::with_capacity(k);

        for _ in 0..k {
            let sine = rng.gen_range(-1.0..=1.0);
            let b = 10f64.powf(rng.gen_range(-2.0..=2.5));
            let a = g
                .steering(&Direction::from_sines(0.0, sine).unwrap())
                .into_entries();
            state.seat(a.clone(), b);
            for r in 0..m {
                for c in 0..m {
                    load[(r, c)] += b * a[r] * a[c].conj();
                }
            }
            users.push((a, b));

            // After every update the maintained inverse must match a fresh
            // factorization of the rebuilt matrix.
            let direct = load.clone().cholesky().unwrap().inverse();
            let drift = (state.whitened_inverse() - &direct)
                .iter()
                .fold(0.0f64, |acc, e| acc.max(e.norm()));
            worst_update = worst_update.max(drift);
        }

        for (drop, _) in users.iter().enumerate() {
            let mut reduced = DMatrix::<Complex64>::identity(m, m);
            for (j, (a, b)) in users.iter().enumerate() {
                if j == drop {
                    continue;
                }
                for r in 0..m {
                    for c in 0..m {
                        reduced[(r, c)] += *b * a[r] * a[c].conj();
                    }
                }
            }
            let direct = reduced.cholesky().unwrap().inverse();
            let drift = (state.downdated(drop) - &direct)
                .iter()
                .fold(0.0f64, |acc, e| acc.max(e.norm()));
            worst_downdate = worst_downdate.max(drift);
        }
    }

    assert!(worst_update <= 1e-8, "update drift {worst_update:.3e}");
    assert!(worst_downdate <= 1e-8, "downdate drift {worst_downdate:.3e}");
}

#[test]
fn windowed_sweep_reports_consistent_prefixes() {
    // Staggered ranges keep every pairwise window satisfiable while the
    // floor and ceiling both stay active in the cosine filters.
    let g = ArrayGeometry::ula(16).unwrap();
    let sector = swarm_mimo::orthogonal::AngularSector::azimuth_span(90f64.to_radians()).unwrap();
    let cb = DirectionCodebook::build(&g, &sector, 4).unwrap();
    let ranges: Vec<f64> = (0..10).map(|i| 50.0 + 25.0 * i as f64).collect();
    let snrs: Vec<f64> = (0..10).map(|i| 30.0 / (1.0 + i as f64)).collect();

    let out = greedy_directions_sic(&g, &cb, &ranges, &snrs, 10.0, 500.0).unwrap();
    assert_eq!(out.effective_d_max, 500.0);
    for w in out.progress.windows(2) {
        assert!(w[1] >= w[0] - 1e-12);
    }

    let placements: Vec<UavPlacement> = out
        .directions
        .iter()
        .zip(&ranges)
        .map(|(d, &r)| UavPlacement::new(r, *d).unwrap())
        .collect();
    for i in 0..placements.len() {
        for j in 0..i {
            let pi = placements[i].position();
            let pj = placements[j].position();
            let dist = ((pi[0] - pj[0]).powi(2) + (pi[1] - pj[1]).powi(2) + (pi[2] - pj[2]).powi(2))
                .sqrt();
            assert!(dist >= 10.0 - 1e-9);
            assert!(dist <= 500.0 + 1e-9);
        }
    }

    let p_bar: Vec<f64> = snrs
        .iter()
        .zip(&ranges)
        .map(|(&b, &r)| b * r * r / 10_000.0)
        .collect();
    let f = SwarmFormation::new(placements, p_bar).unwrap();
    let h = channel_matrix(&g, &f, 100.0).unwrap();
    let direct = sic_sum_capacity(&h, f.ref_snrs()).unwrap();
    assert!((out.objective - direct).abs() <= 1e-9);
}
