use effham_core::integrators::step_rk4;
use effham_core::network::{linear_invariants, mass_action_odes, parse_network, serialize, ReactionNetwork};
use effham_core::PhaseState;
use nalgebra::DMatrix;
use proptest::prelude::*;

const SPECIES: [&str; 5] = ["A", "B", "C", "D", "E"];

/// One side as coefficients per species; all zero means the empty side.
fn side(n: usize, max_coeff: u32) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(prop_oneof![3 => Just(0u32), 2 => 1..=max_coeff], n)
}

fn side_text(coeffs: &[u32]) -> String {
    let terms: Vec<String> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 0)
        .map(|(i, c)| if *c == 1 { SPECIES[i].to_string() } else { format!("{c} {}", SPECIES[i]) })
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

fn network_text(max_coeff: u32, max_rate: f64) -> impl Strategy<Value = String> {
    (2usize..=5).prop_flat_map(move |n| {
        prop::collection::vec((side(n, max_coeff), side(n, max_coeff), 0.05..max_rate, any::<bool>()), 1..=6).prop_map(
            |reactions| {
                let mut text = String::from("# generated\n");
                let mut k = 0;
                for (r, p, rate, symbolic) in reactions {
                    if r.iter().all(|c| *c == 0) && p.iter().all(|c| *c == 0) {
                        continue;
                    }
                    if symbolic {
                        text.push_str(&format!("param k{k} = {rate:?}\n"));
                        text.push_str(&format!("{} -> {} [k{k}]\n", side_text(&r), side_text(&p)));
                        k += 1;
                    } else {
                        text.push_str(&format!("{} -> {} [{rate:?}]\n", side_text(&r), side_text(&p)));
                    }
                }
                if k == 0 && !text.contains("->") {
                    text.push_str("A -> B [1]\n");
                }
                text
            },
        )
    })
}

fn parsed(text: &str) -> ReactionNetwork {
    parse_network(text).unwrap().network
}

fn f64_rank(n: &DMatrix<i64>) -> usize {
    let m = n.map(|v| v as f64);
    if m.is_empty() {
        return 0;
    }
    m.svd(false, false).rank(1e-9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn serialize_round_trips(text in network_text(3, 50.0)) {
        let net = parsed(&text);
        let again = parsed(&serialize(&net));
        prop_assert_eq!(&net, &again);
        prop_assert_eq!(serialize(&net), serialize(&again));
    }

    #[test]
    fn invariants_span_the_left_null_space(
        text in network_text(3, 10.0),
        xs in prop::collection::vec(0.01f64..2.0, 5),
    ) {
        let net = parsed(&text);
        let n = net.stoichiometric_matrix();
        let basis = linear_invariants(&net);
        prop_assert_eq!(basis.len(), net.species_count() - f64_rank(&n));
        let x = &xs[..net.species_count()];
        let fluxes = net.fluxes(x);
        let field = mass_action_odes(&net).eval(x);
        for c in &basis {
            prop_assert!(c.iter().find(|v| **v != 0).is_some_and(|v| *v > 0));
            let g = c.iter().fold(0i64, |g, v| num_gcd(g, v.abs()));
            prop_assert_eq!(g, 1);
            for k in 0..n.ncols() {
                let dot: i64 = (0..n.nrows()).map(|i| c[i] * n[(i, k)]).sum();
                prop_assert_eq!(dot, 0);
            }
            let rate: f64 = c.iter().zip(&field).map(|(ci, fi)| *ci as f64 * fi).sum();
            let scale: f64 = (0..n.ncols())
                .map(|k| (0..n.nrows()).map(|i| (c[i] * n[(i, k)]).abs() as f64).sum::<f64>() * fluxes[k])
                .sum::<f64>()
                + c.iter().map(|v| v.abs() as f64).sum::<f64>() * field.iter().map(|v| v.abs()).fold(0.0, f64::max);
            prop_assert!(rate.abs() <= 1e-13 * scale.max(1.0), "c = {:?}, rate = {:e}", c, rate);
        }
    }

    #[test]
    fn fields_are_polynomials_of_bounded_degree(
        text in network_text(2, 5.0),
        x0 in prop::collection::vec(0.0f64..1.5, 5),
        dir in prop::collection::vec(-1.0f64..1.0, 5),
    ) {
        let net = parsed(&text);
        let d = net.species_count();
        let degree = net.reactions.iter().map(|r| r.reactants.iter().sum::<u32>()).max().unwrap() as usize;
        let sys = mass_action_odes(&net);
        let step = 0.1;
        let points: Vec<Vec<f64>> = (0..=degree + 1)
            .map(|j| (0..d).map(|i| x0[i] + j as f64 * step * dir[i]).collect())
            .collect();
        let values: Vec<Vec<f64>> = points.iter().map(|p| sys.eval(p)).collect();
        // (degree + 1)-th forward difference of a degree-`degree` polynomial is 0.
        let mut diffs = values.clone();
        for _ in 0..=degree {
            diffs = diffs.windows(2).map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect()).collect();
        }
        let scale = values.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs())) * (1u64 << (degree + 1)) as f64;
        for v in diffs.iter().flatten() {
            prop_assert!(v.abs() <= 1e-12 * scale, "{:e}", v);
        }
    }

    #[test]
    fn rk4_keeps_concentrations_non_negative(
        text in network_text(2, 1.0),
        x0 in prop::collection::vec(0.0f64..1.0, 5),
    ) {
        let net = parsed(&text);
        let sys = mass_action_odes(&net);
        let mut s = PhaseState::at(x0[..net.species_count()].to_vec()).unwrap();
        for _ in 0..5000 {
            match step_rk4(&sys, &s, 1e-4) {
                Ok(next) => s = next,
                Err(e) => prop_assert!(false, "{}", e),
            }
            prop_assert!(s.x.iter().all(|v| *v >= -1e-9), "{:?}", s.x);
            if s.x.iter().any(|v| *v > 100.0) {
                // Autocatalytic blow-up; positivity up to here is what matters.
                break;
            }
        }
    }
}

fn num_gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a } else { num_gcd(b, a % b) }
}

#[test]
fn brusselator_file_compiles_to_closed_form() {
    let text = "param a = 1\nparam b = 3\n0 -> x [a]\n2 x + y -> 3 x [1]\nx -> y [b]\nx -> 0 [1]\n";
    let net = parsed(text);
    let sys = mass_action_odes(&net);
    for (x, y) in [(1.0, 1.0), (0.3, 2.2), (1.7, 0.4)] {
        let f = sys.eval(&[x, y]);
        assert!((f[0] - (1.0 + x * x * y - 3.0 * x - x)).abs() <= 1e-14);
        assert!((f[1] - (3.0 * x - x * x * y)).abs() <= 1e-14);
    }
    assert!(linear_invariants(&net).is_empty());
}
