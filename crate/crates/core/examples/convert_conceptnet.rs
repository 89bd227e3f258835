//! Lower a few raw assertion rows to the four-column triple TSV, then ingest
//! the result.
//!
//! `cargo run --example convert_conceptnet`

use kgrel::conceptnet::convert;
use kgrel::kb::ingest;

const DUMP: &str = "\
/a/[/r/IsA/,/c/en/car/,/c/en/vehicle/]\t/r/IsA\t/c/en/car\t/c/en/vehicle\t{\"weight\": 2.0}
/a/[/r/HasA/,/c/en/electrons/,/c/en/negative_charge/]\t/r/HasA\t/c/en/electrons/n\t/c/en/negative_charge\t{\"weight\": 1.0}
/a/[/r/IsA/,/c/fr/voiture/,/c/fr/véhicule/]\t/r/IsA\t/c/fr/voiture\t/c/fr/véhicule\t{\"weight\": 1.0}
/a/[/r/UsedFor/,/c/en/car/,/c/en/driving/]\t/r/UsedFor\t/c/en/car\t/c/en/driving\t{\"weight\": 1.0}
";

fn main() -> kgrel::Result<()> {
    let mut tsv = Vec::new();
    let stats = convert(DUMP.as_bytes(), &mut tsv)?;
    println!("{stats:?}");
    print!("{}", String::from_utf8_lossy(&tsv));

    let kg = ingest(tsv.as_slice())?;
    println!(
        "{} concepts, {} relations, {} triples",
        kg.num_concepts(),
        kg.num_relations(),
        kg.num_triples()
    );
    Ok(())
}
