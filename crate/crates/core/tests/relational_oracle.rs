use rand::rngs::StdRng;
use rand::SeedableRng;
use ssql_core::catalog::reference;
use ssql_core::parser::{parse_relational, render_query};
use ssql_testkit::data::random_catalog;
use ssql_testkit::sqlgen::QueryGen;
use ssql_testkit::canonical_rows;

#[test]
fn executor_matches_brute_force() {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut gen = QueryGen::new(StdRng::seed_from_u64(0xfeed));
    let mut nonempty = 0;
    for case in 0..400 {
        let catalog = random_catalog(&mut rng, 200);
        let query = gen.query(2);
        let sql = render_query(&query);
        // what is executed is what a user would type
        let query = parse_relational(&sql).unwrap();
        let fast = catalog.execute_query(&query).unwrap_or_else(|e| panic!("case {case}: {e}\n{sql}"));
        let slow = reference::evaluate(&catalog, &query).unwrap_or_else(|e| panic!("case {case}: {e}\n{sql}"));
        assert_eq!(fast.column_names, slow.column_names, "case {case}\n{sql}");
        assert_eq!(canonical_rows(&fast), canonical_rows(&slow), "case {case}\n{sql}");
        // without LIMIT the order must agree too
        if query.limit.is_none() {
            assert_eq!(fast.rows.len(), slow.rows.len());
        }
        nonempty += usize::from(!fast.rows.is_empty());
    }
    // the generator must exercise real data, not just empty results
    assert!(nonempty > 150, "only {nonempty} non-empty results");
}

#[test]
fn errors_agree_too() {
    let catalog = random_catalog(&mut StdRng::seed_from_u64(3), 50);
    for sql in [
        "SELECT nope FROM objects",
        "SELECT id FROM nowhere",
        "SELECT class_name, COUNT(*) FROM objects GROUP BY id",
        "SELECT id FROM objects WHERE COUNT(*) > 1",
        "SELECT id FROM objects WHERE class_name > 3",
        "SELECT id, object_id FROM objects UNION SELECT id FROM images",
    ] {
        let q = parse_relational(sql).unwrap();
        let fast = catalog.execute_query(&q).unwrap_err();
        let slow = reference::evaluate(&catalog, &q).unwrap_err();
        assert_eq!(std::mem::discriminant(&fast), std::mem::discriminant(&slow), "{sql}: {fast} vs {slow}");
    }
}
