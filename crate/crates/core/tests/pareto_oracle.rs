use rand::Rng;
use rmoqpso_core::benchmarks::TailKind;
use rmoqpso_core::mo::{CandidatePosition, ObjectiveVector, ParetoArchive};
use rmoqpso_core::optim::seeded_rng;

fn random_vector(rng: &mut impl Rng) -> ObjectiveVector {
    // a coarse grid produces ties and dominated pairs
    let mut c = [0.0; 5];
    for v in &mut c {
        *v = f64::from(rng.random_range(0u8..=20)) * 0.05;
    }
    ObjectiveVector::new(c[0], c[1], c[2], c[3], c[4], TailKind::Ess)
}

#[test]
fn archive_equals_brute_force_filter() {
    let mut rng = seeded_rng(77);
    let stream: Vec<ObjectiveVector> = (0..500).map(|_| random_vector(&mut rng)).collect();
    let mut archive = ParetoArchive::new(500);
    let pos = CandidatePosition::new(vec![1.0, 1.0], 1);
    for o in &stream {
        archive.insert(pos.clone(), *o).unwrap();
    }
    let mut expected: Vec<[f64; 5]> = Vec::new();
    for o in &stream {
        if !stream.iter().any(|p| p.dominates(o)) && !expected.contains(&o.components()) {
            expected.push(o.components());
        }
    }
    let mut got: Vec<[f64; 5]> = archive.entries().iter().map(|e| e.objectives.components()).collect();
    let key = |v: &[f64; 5]| v.map(|x| (x * 20.0).round() as u32);
    assert!(expected.len() > 50);
    expected.sort_by_key(key);
    got.sort_by_key(key);
    assert_eq!(got, expected);
}
