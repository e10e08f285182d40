//! Fixed programs and documents: the person example, the nested for/let
//! example and the nine benchmark queries.

use crate::error::Result;
use crate::mft::{parse_mft, Mft};
use crate::query::{parse_query, Query};

pub const P_PERSON: &str = r#"<out>{ for $b in
       $input/person[./p_id/text() = "person0"]
       return let $r := $b/name/text()
       return $r }</out>"#;

pub const PERSON_DOC: &str = "<person><p_id><a/>person0</p_id><name>Jim
  </name><c/><name>Li</name></person>";

/// Same shape, but the first `p_id` does not match and the second
/// `name` is replaced by a matching `p_id`.
pub const PERSON_DOC_VARIANT: &str = "<person><p_id><a/>perso7</p_id><name>Jim
  </name><c/><p_id>person0</p_id></person>";

/// `M_person`, rule for rule. `q0` has no listed ε-rule; it is written as a
/// stay rule so the empty document yields `<out/>`.
pub const M_PERSON: &str = r#"
# sigma: person p_id #"person0" name out
q0(%) -> out(q1(x0))
q1(person(x1)x2) -> q2(x1, q4(x1)) q1(x2)
q1(%t(x1)x2) -> q1(x1) q1(x2)
q1(eps) -> eps
q2(p_id(x1)x2, y1) -> q3(x1, y1, q2(x2, y1))
q2(%t(x1)x2, y1) -> q2(x2, y1)
q2(eps, y1) -> eps
q3(#"person0"(x1)x2, y1, y2) -> y1
q3(%t(x1)x2, y1, y2) -> q3(x2, y1, y2)
q3(eps, y1, y2) -> y2
q4(name(x1)x2) -> q5(x1) q4(x2)
q4(%t(x1)x2) -> q4(x2)
q4(eps) -> eps
q5(%text(x1)x2) -> %t() q5(x2)
q5(%t(x1)x2) -> q5(x2)
q5(eps) -> eps
"#;

pub const NESTED: &str = r#"for $v1 in $input/descendant::a return
  for $v2 in $v1/descendant::b return
    let $v3 := $v2/descendant::c return
    let $v4 := $v2/descendant::d return
    ($v1,$v2,$v3,$v4)"#;

pub const NESTED_DOC: &str = "<doc><a><b><c><c/></c><d/><d/></b>
  <b><d/></b></a></doc>";

pub const Q01: &str = r#"<query01>{
for $person in $input/site/people/person
               [./person_id/text()="person0"]
return $person/name/text()}</query01>"#;

pub const Q02: &str = r#"<query02>{
for $open_auction in /site/open_auctions/open_auction return
 <increase>{ for $increase in $open_auction/bidder/increase return
   <bid>{$increase/text()}</bid> }</increase>
}</query02>"#;

pub const Q04: &str = r#"<query04>{
for $b in $input/site/open_auctions/open_auction
          [./bidder[./personref/personref_person/text()="personXX"]
            /following-sibling::bidder/personref/personref_person
            /text()="personYY"]
return <history>{$b/reserve/text()}</history>}</query04>"#;

pub const Q13: &str = r#"<query13>{
for $item in $input/site/regions/australia/item
return <item><name>{$item/name/text()}</name>
             <description>{$item/description}</description></item>
}</query13>"#;

pub const Q16: &str = r#"<query16>{
for $closed_auction in $input/site/closed_auctions/closed_auction
                [./annotation/description/parlist/listitem/parlist
                  /listitem/text/emph/keyword/text()] return
  <person><id>{$closed_auction/seller/seller_person}</id></person>
}</query16>"#;

pub const Q17: &str = r#"<query17>{
for $person in $input/site/people/person[empty(./homepage/text())]
return <person><name>{$person/name/text()}</name></person>
}</query17>"#;

pub const DOUBLE: &str = r#"<double><r1>{$input/*}</r1>{$input/*}</double>"#;

pub const FOURSTAR: &str = r#"<fourstar>{$input//*//*//*//*}</fourstar>"#;

pub const DEEPDUP: &str = r#"<deepdup>{ for $x in $input/* return
 <r> { for $y in $x/* return <r1><r2>{$y}</r2>{$y}</r1> } </r>
}</deepdup>"#;

/// The benchmark queries by id.
pub const QUERIES: [(&str, &str); 9] = [
    ("q01", Q01),
    ("q02", Q02),
    ("q04", Q04),
    ("q13", Q13),
    ("q16", Q16),
    ("q17", Q17),
    ("double", DOUBLE),
    ("fourstar", FOURSTAR),
    ("deepdup", DEEPDUP),
];

pub fn query_text(id: &str) -> Option<&'static str> {
    match id {
        "person" => Some(P_PERSON),
        "nested" => Some(NESTED),
        _ => QUERIES.iter().find(|(k, _)| *k == id).map(|(_, q)| *q),
    }
}

pub fn query(id: &str) -> Option<Query> {
    query_text(id).map(|q| parse_query(q).expect("corpus queries parse"))
}

pub fn m_person() -> Result<Mft> {
    parse_mft(M_PERSON)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{forest_to_xml, xml_to_forest};
    use crate::mft::{evaluate, validate};
    use crate::query::interpret;

    #[test]
    fn all_queries_parse() {
        for (id, _) in QUERIES {
            assert!(query(id).is_some(), "{id}");
        }
    }

    #[test]
    fn m_person_outputs() {
        let m = m_person().unwrap();
        assert!(validate(&m).is_empty());
        let run = |d| forest_to_xml(&evaluate(&m, &xml_to_forest(d).unwrap()).unwrap().normalize());
        assert_eq!(run(PERSON_DOC), "<out>JimLi</out>");
        assert_eq!(run(PERSON_DOC_VARIANT), "<out>Jim</out>");
    }

    #[test]
    fn nested_order() {
        let doc = xml_to_forest(NESTED_DOC).unwrap();
        let out = interpret(&query("nested").unwrap(), &doc).unwrap();
        let roots: Vec<&str> = out.0.iter().map(|t| &*t.label.name).collect();
        assert_eq!(roots, ["a", "b", "c", "c", "d", "d", "a", "b", "d"]);
    }
}
