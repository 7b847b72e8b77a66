use diskflow::field::MapField;
use diskflow::hyperbolic::{DiskPoint, Mobius, Space};
use diskflow::mesh::Mesh;
use diskflow::verify::{distsq_check, MapPair};

#[test]
#[ignore]
fn probe_distsq_scan() {
    let sp = Space::unit();
    for &(ax, ay, rot) in &[(0.25, 0.1, 0.4), (0.2, 0.0, 0.3), (0.3, 0.15, 0.8), (0.15, 0.1, 0.2)] {
        let m = Mobius { a: DiskPoint::new(ax, ay), rot };
        for &r in &[1.0f64, 1.2] {
            let mut vals = Vec::new();
            for &h in &[0.2, 0.1, 0.05] {
                let mesh = Mesh::generate(r, h).unwrap();
                let pair = MapPair::new(MapField::identity(&mesh, sp), MapField::mobius(&mesh, sp, &m)).unwrap();
                vals.push(distsq_check(&mesh, &pair, 8).unwrap().max_rel_discrepancy);
            }
            let ls = (vals[0] / vals[2]).log2() / 2.0;
            println!(
                "m=({ax},{ay},{rot}) R={r}: {:.5} {:.5} {:.5} | orders {:.2},{:.2} LS {ls:.2}",
                vals[0], vals[1], vals[2],
                (vals[0] / vals[1]).log2(),
                (vals[1] / vals[2]).log2()
            );
        }
    }
}
