use super::{Path, Predicate, Query, Step, INPUT};

struct Scope<'q> {
    bound: Vec<&'q str>,
    nearest_for: Option<&'q str>,
}

/// Diagnostics for variables that are free or used as a path start outside
/// the nearest enclosing `for`. Empty means the program is well scoped.
pub fn check_scoping(q: &Query) -> Vec<String> {
    let mut diags = Vec::new();
    let mut scope = Scope { bound: vec![INPUT], nearest_for: None };
    scope_query(q, &mut scope, &mut diags);
    diags
}

fn scope_path(p: &Path, scope: &Scope<'_>, diags: &mut Vec<String>) {
    if !scope.bound.contains(&p.start.as_str()) {
        diags.push(format!("`${}` is not bound (in `{p}`)", p.start));
        return;
    }
    if p.is_var() {
        return;
    }
    let expected = scope.nearest_for.unwrap_or(INPUT);
    if p.start != expected {
        diags.push(format!(
            "path `{p}` must start at `${expected}`, the variable of the nearest enclosing for clause"
        ));
    }
}

fn scope_query<'q>(q: &'q Query, scope: &mut Scope<'q>, diags: &mut Vec<String>) {
    match q {
        Query::Element { children, .. } => {
            for c in children {
                scope_query(c, scope, diags);
            }
        }
        Query::Str(_) => {}
        Query::Seq(items) => {
            for c in items {
                scope_query(c, scope, diags);
            }
        }
        Query::Path(p) => scope_path(p, scope, diags),
        Query::For { var, path, body } => {
            scope_path(path, scope, diags);
            if var.is_empty() {
                diags.push("empty variable name".into());
            }
            let saved = scope.nearest_for.replace(var);
            scope.bound.push(var);
            scope_query(body, scope, diags);
            scope.bound.pop();
            scope.nearest_for = saved;
        }
        Query::Let { var, bound, body } => {
            scope_query(bound, scope, diags);
            scope.bound.push(var);
            scope_query(body, scope, diags);
            scope.bound.pop();
        }
    }
}

/// Number of nodes in the parse tree.
pub fn query_size(q: &Query) -> usize {
    match q {
        Query::Element { children, .. } => 1 + children.iter().map(query_size).sum::<usize>(),
        Query::Str(_) => 1,
        Query::For { path, body, .. } => 2 + path_size(path) + query_size(body),
        Query::Let { bound, body, .. } => 2 + query_size(bound) + query_size(body),
        Query::Path(p) => path_size(p),
        Query::Seq(items) => 1 + items.iter().map(query_size).sum::<usize>(),
    }
}

fn path_size(p: &Path) -> usize {
    2 + steps_size(&p.steps)
}

fn steps_size(steps: &[Step]) -> usize {
    steps.iter().map(|s| 3 + s.preds.iter().map(pred_size).sum::<usize>()).sum()
}

fn pred_size(p: &Predicate) -> usize {
    let base = 1 + 1 + steps_size(p.steps());
    match p {
        Predicate::Exists(_) => base,
        Predicate::Empty(_) => base + 1,
        Predicate::Eq(..) | Predicate::Neq(..) => base + 1,
    }
}

/// The two syntactic conditions under which every accumulating parameter
/// of the compiled transducer can be removed: no predicates anywhere, and
/// every output-variable use inside a for body refers to that for's own
/// variable.
pub fn check_ft_eligibility(q: &Query) -> bool {
    fn go(q: &Query, nearest_for: Option<&str>) -> bool {
        match q {
            Query::Element { children, .. } => children.iter().all(|c| go(c, nearest_for)),
            Query::Str(_) => true,
            Query::Seq(items) => items.iter().all(|c| go(c, nearest_for)),
            Query::Path(p) => {
                if p.has_predicates() {
                    return false;
                }
                !p.is_var() || nearest_for.is_none_or(|v| v == p.start)
            }
            Query::For { var, path, body } => !path.has_predicates() && go(body, Some(var)),
            Query::Let { bound, body, .. } => go(bound, nearest_for) && go(body, nearest_for),
        }
    }
    go(q, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::parse_query;

    fn scoped(s: &str) -> Vec<String> {
        check_scoping(&parse_query(s).unwrap())
    }

    #[test]
    fn nested_example_is_well_scoped() {
        let q = "for $v1 in $input/descendant::a return
                 for $v2 in $v1/descendant::b return
                 let $v3 := $v2/descendant::c return
                 let $v4 := $v2/descendant::d return
                 ($v1,$v2,$v3,$v4)";
        assert!(scoped(q).is_empty(), "{:?}", scoped(q));
    }

    #[test]
    fn outer_for_variable_as_path_start_is_rejected() {
        let d = scoped("for $a in $input/child::x return for $b in $a/child::y return $a/child::z");
        assert_eq!(d.len(), 1);
        assert!(d[0].contains("$b"));
    }

    #[test]
    fn output_variables_are_accepted() {
        assert!(scoped("for $a in $input/child::x return ($a, $a)").is_empty());
        assert!(scoped("for $a in $input/x return for $b in $a/y return ($a, $input)").is_empty());
    }

    #[test]
    fn free_variables_are_rejected() {
        assert_eq!(scoped("$foo").len(), 1);
        assert_eq!(scoped("<a>{$input/b}{let $x := $input return $y}</a>").len(), 1);
        assert_eq!(scoped("for $a in $input/x return $input/y").len(), 1);
    }

    #[test]
    fn sizes() {
        // Element(1) + Path(2 + step 3)
        assert_eq!(query_size(&parse_query("<r>{$input/a}</r>").unwrap()), 6);
        assert_eq!(query_size(&parse_query("<r>hello</r>").unwrap()), 2);
        // For(2) + path(2+3) + body path(2)
        assert_eq!(query_size(&parse_query("for $x in $input/a return $x").unwrap()), 9);
        // step 3 + Eq(2 + one step 3 + 1)
        assert_eq!(query_size(&parse_query(r#"$input/a[./b = "s"]"#).unwrap()), 11);
    }

    #[test]
    fn eligibility() {
        let ok = |s: &str| check_ft_eligibility(&parse_query(s).unwrap());
        assert!(ok("<r>{for $x in $input/a return <b>{$x}</b>}</r>"));
        assert!(!ok("<r>{for $x in $input/a[./c] return $x}</r>"));
        assert!(!ok("for $x in $input/a return for $y in $x/b return $x"));
        assert!(!ok("for $x in $input/a return let $y := $x/b return $y"));
        assert!(ok("let $y := $input/b return <a>{$y}</a>"));
    }
}
