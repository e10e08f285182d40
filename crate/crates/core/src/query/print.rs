use std::fmt::{self, Write};

use super::{Axis, NodeTest, Path, Predicate, Query, Step};

pub(super) fn write_query(q: &Query, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match q {
        Query::Element { name, children } => {
            if children.is_empty() {
                return write!(f, "<{name}></{name}>");
            }
            write!(f, "<{name}>")?;
            for c in children {
                match c {
                    Query::Element { .. } => write_query(c, f)?,
                    Query::Str(s) => write_text(s, f)?,
                    other => {
                        f.write_str("{")?;
                        write_query(other, f)?;
                        f.write_str("}")?;
                    }
                }
            }
            write!(f, "</{name}>")
        }
        Query::Str(s) => write_text(s, f),
        Query::For { var, path, body } => {
            write!(f, "for ${var} in ")?;
            write_path(path, f)?;
            f.write_str(" return ")?;
            write_query(body, f)
        }
        Query::Let { var, bound, body } => {
            write!(f, "let ${var} := ")?;
            write_query(bound, f)?;
            f.write_str(" return ")?;
            write_query(body, f)
        }
        Query::Path(p) => write_path(p, f),
        Query::Seq(items) => {
            f.write_str("(")?;
            for (i, it) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_query(it, f)?;
            }
            f.write_str(")")
        }
    }
}

fn write_text(s: &str, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    for c in s.chars() {
        match c {
            '<' => f.write_str("&lt;")?,
            '&' => f.write_str("&amp;")?,
            '{' => f.write_str("{{")?,
            '}' => f.write_str("}}")?,
            c => f.write_char(c)?,
        }
    }
    Ok(())
}

pub(super) fn write_path(p: &Path, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "${}", p.start)?;
    for s in &p.steps {
        write_step(s, f)?;
    }
    Ok(())
}

pub(super) fn write_step(s: &Step, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let axis = match s.axis {
        Axis::Child => "child",
        Axis::Descendant => "descendant",
        Axis::FollowingSibling => "following-sibling",
    };
    write!(f, "/{axis}::")?;
    match &s.test {
        NodeTest::Name(n) => f.write_str(n)?,
        NodeTest::Star => f.write_str("*")?,
        NodeTest::Text => f.write_str("text()")?,
        NodeTest::Node => f.write_str("node()")?,
    }
    for p in &s.preds {
        f.write_str("[")?;
        write_pred(p, f)?;
        f.write_str("]")?;
    }
    Ok(())
}

fn write_predpath(steps: &[Step], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    f.write_str(".")?;
    for s in steps {
        write_step(s, f)?;
    }
    Ok(())
}

fn write_string(s: &str, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    f.write_char('"')?;
    for c in s.chars() {
        if c == '"' {
            f.write_str("\"\"")?;
        } else {
            f.write_char(c)?;
        }
    }
    f.write_char('"')
}

pub(super) fn write_pred(p: &Predicate, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match p {
        Predicate::Exists(s) => write_predpath(s, f),
        Predicate::Empty(s) => {
            f.write_str("empty(")?;
            write_predpath(s, f)?;
            f.write_str(")")
        }
        Predicate::Eq(s, v) => {
            write_predpath(s, f)?;
            f.write_str(" = ")?;
            write_string(v, f)
        }
        Predicate::Neq(s, v) => {
            write_predpath(s, f)?;
            f.write_str(" != ")?;
            write_string(v, f)
        }
    }
}
