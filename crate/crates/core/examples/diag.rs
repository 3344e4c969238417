// scratch diagnostic
use perim_core::fractional::*;
use perim_core::geometry::Vec2;

fn main() {
    let s = 0.5;
    let n = 8i32;
    // exact windowed perimeter via coaxial pairs
    let reach = 16i32; // truncation 2.0 * n
    let mut exact = 0.0;
    let mut memo = std::collections::HashMap::new();
    for ax in 0..n {
        for ay in 0..n {
            for bx in -reach..(n + reach) {
                for by in -reach..(n + reach) {
                    if (0..n).contains(&bx) && (0..n).contains(&by) { continue; }
                    let d = (bx - ax, by - ay);
                    let key = {
                        let (a,b) = (d.0.abs(), d.1.abs());
                        (a.max(b), a.min(b))
                    };
                    let v = *memo.entry(key).or_insert_with(|| {
                        coaxial_unit_pair(s, Vec2::new(key.0 as f64, key.1 as f64), 1e-10).unwrap().value
                    });
                    exact += v;
                }
            }
        }
    }
    exact *= (n as f64).powf(s - 2.0);
    println!("exact coaxial windowed Per = {exact}");

    let e = PixelSet::unit_square(n as u32);
    let c = FractionalConfig::new(s).unwrap().with_truncation(2.0).unwrap().with_depth(6).unwrap()
        .with_diagonal_mode(DiagonalMode::AnalyticCorner);
    let per = frac_perimeter(&e, &c).unwrap();
    println!("AC impl = {} +- {}", per.value, per.radius);
    let c2 = FractionalConfig::new(s).unwrap().with_truncation(2.0).unwrap().with_depth(6).unwrap();
    let per2 = frac_perimeter(&e, &c2).unwrap();
    println!("SUB impl = {} +- {}", per2.value, per2.radius);
}
