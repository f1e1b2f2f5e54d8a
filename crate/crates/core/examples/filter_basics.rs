//! Build a filter by hand, query membership and dump the corners as CSV.

use filter_arc::Filter;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut filter = Filter::new(100.0, 1e-5, 1e-5)?;
    for (h, l) in [(4.0, 1.0), (2.0, 3.0), (1.0, 5.0), (3.0, 4.0)] {
        filter.add(h, l);
        println!("add ({h}, {l}) -> {} corners", filter.len());
    }
    for (h, l) in [(0.5, 10.0), (2.5, 3.5), (5.0, 0.0), (150.0, -1.0)] {
        let verdict = match filter.acceptable(h, l) {
            Ok(true) => "acceptable".to_owned(),
            Ok(false) => "in region".to_owned(),
            Err(e) => e.to_string(),
        };
        println!("({h}, {l}): {verdict}");
    }
    filter.write_csv(std::io::stdout())?;
    Ok(())
}
