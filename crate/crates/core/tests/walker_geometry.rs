//! Dense-grid oracle for the finite start reduction: on small boxes, the
//! crossing decisions obtained from `representative_starts` must equal the
//! decisions obtained from a dense grid of starts at spacing 1/64 on the
//! source face, for a catalog of targets.

use rwde::cross::{crossing_from_starts, BoxSpec, CrossSpec};
use rwde::env::Environment;
use rwde::rng::{uniform_word, Key, Tag};
use rwde::walk::{representative_starts, snap, FaceSeg, WalkParams};

fn dense_starts(face: &FaceSeg) -> Vec<(f64, f64)> {
    let step = 1.0 / 64.0;
    match face.snapped() {
        FaceSeg::Point { x, y } => vec![(x, y)],
        FaceSeg::Vertical { x, y0, y1 } => {
            let mut out = Vec::new();
            let mut t = y0;
            while t <= y1 {
                out.push((x, t));
                t += step;
            }
            out.push((x, y1));
            out
        }
        FaceSeg::Horizontal { x0, x1, y } => {
            let mut out = Vec::new();
            let mut x = x0;
            while x <= x1 {
                out.push((x, y));
                x += step;
            }
            out.push((x1, y));
            out
        }
    }
}

fn targets_for(b: &BoxSpec) -> Vec<FaceSeg> {
    let mut t = vec![b.right(), b.top(), b.left()];
    // Corner-anchored half-unit sub-segments of the top and right faces.
    t.push(FaceSeg::Horizontal { x0: b.u.0, x1: (b.u.0 + 0.5).min(b.x1()), y: b.y1() });
    t.push(FaceSeg::Horizontal { x0: (b.x1() - 0.5).max(b.u.0), x1: b.x1(), y: b.y1() });
    t.push(FaceSeg::Vertical { x: b.x1(), y0: (b.y1() - 1.0).max(b.u.1), y1: b.y1() });
    t
}

#[test]
fn representative_reduction_matches_dense_grid() {
    let env = Environment::iid_symmetric();
    let params = WalkParams::with_max_ellipticity(0.15).unwrap();
    let mut checked = 0u64;
    for case in 0..14u64 {
        let key = Key::new(20_000 + case, Tag::Bootstrap, &[]);
        let u = (
            snap(uniform_word(key, 0) * 4.0 - 2.0),
            snap(uniform_word(key, 1) * 4.0 - 2.0),
        );
        let w = snap(1.0 + uniform_word(key, 2) * 7.0);
        let h = snap(1.0 + uniform_word(key, 3) * 7.0);
        let b = BoxSpec::new(u, w, h).unwrap();
        for source in [b.left(), b.bottom()] {
            for (reflect, kill) in [(false, None), (true, Some(b.left()))] {
                for target in targets_for(&b) {
                    let spec = CrossSpec {
                        bbox: b,
                        source,
                        target,
                        reflect_right: reflect,
                        kill_touch: kill,
                        target_excludes: None,
                        name: "oracle".into(),
                    };
                    let reps = representative_starts(&spec.source);
                    let dense = dense_starts(&spec.source);
                    for seed in 0..12u64 {
                        let a = crossing_from_starts(
                            &mut env.sampler(seed),
                            &params,
                            &spec,
                            &reps,
                        );
                        let d = crossing_from_starts(
                            &mut env.sampler(seed),
                            &params,
                            &spec,
                            &dense,
                        );
                        assert_eq!(
                            a, d,
                            "reduction mismatch: box {u:?} {w}x{h} source {source:?} \
                             target {:?} reflect {reflect} seed {seed}",
                            spec.target
                        );
                        checked += 1;
                    }
                }
            }
        }
    }
    assert!(checked >= 4000, "catalog too small: {checked}");
}
