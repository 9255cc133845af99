use std::fmt::Write as _;
use std::path::Path;

use roxmltree::{Document, Node};

use super::{format_percent, BinMatcher, CoverageDb, Covergroup, Coverpoint};
use crate::crv::Interval;
use crate::error::{Error, Result};

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Serializes `db`. Output depends only on its contents.
pub fn write_coverage_db(db: &CoverageDb) -> String {
    let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<coverage_db test=\"{}\" seed=\"{}\" transactions=\"{}\" coverage=\"{}\">",
        escape(&db.test),
        escape(&db.seed),
        db.transactions,
        format_percent(db.coverage())
    );
    for g in &db.groups {
        let _ = writeln!(
            s,
            "  <covergroup name=\"{}\" coverage=\"{}\">",
            escape(&g.name),
            format_percent(g.coverage())
        );
        for cp in &g.coverpoints {
            let source = if cp.source != cp.name {
                format!(" source=\"{}\"", escape(&cp.source))
            } else {
                String::new()
            };
            let _ = writeln!(
                s,
                "    <coverpoint name=\"{}\"{} coverage=\"{}\">",
                escape(&cp.name),
                source,
                format_percent(cp.coverage())
            );
            for b in &cp.bins {
                let (kind, lo, hi, extra) = match &b.matcher {
                    BinMatcher::Value(v) => ("value", *v, *v, String::new()),
                    BinMatcher::Range(r) => ("range", r.lo, r.hi, String::new()),
                    BinMatcher::Set(vs) => {
                        let list: Vec<String> = vs.iter().map(i128::to_string).collect();
                        (
                            "set",
                            vs.iter().copied().min().unwrap_or(0),
                            vs.iter().copied().max().unwrap_or(0),
                            format!(" values=\"{}\"", list.join(",")),
                        )
                    }
                };
                let _ = writeln!(
                    s,
                    "      <bin name=\"{}\" kind=\"{kind}\" lo=\"{lo}\" hi=\"{hi}\"{extra} hits=\"{}\" goal=\"{}\"/>",
                    escape(&b.name),
                    b.hits,
                    b.goal
                );
            }
            s.push_str("    </coverpoint>\n");
        }
        for x in &g.crosses {
            let _ = writeln!(
                s,
                "    <cross name=\"{}\" members=\"{}\" coverage=\"{}\">",
                escape(&x.name),
                escape(&x.members.join("|")),
                format_percent(x.coverage())
            );
            for (i, h) in x.hits.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "      <bin tuple=\"{}\" hits=\"{h}\"/>",
                    escape(&x.tuple_label(g, i))
                );
            }
            s.push_str("    </cross>\n");
        }
        s.push_str("  </covergroup>\n");
    }
    s.push_str("</coverage_db>\n");
    s
}

struct Ctx<'a> {
    doc: &'a Document<'a>,
}

impl Ctx<'_> {
    fn err(&self, node: Node, message: impl Into<String>) -> Error {
        Error::Xml {
            line: self.doc.text_pos_at(node.range().start).row,
            message: message.into(),
        }
    }

    fn attr<'n>(&self, node: Node<'n, '_>, name: &str) -> Result<&'n str> {
        node.attribute(name).ok_or_else(|| {
            self.err(
                node,
                format!("<{}> is missing attribute `{name}`", node.tag_name().name()),
            )
        })
    }

    fn num<T: std::str::FromStr>(&self, node: Node, name: &str) -> Result<T> {
        let raw = self.attr(node, name)?;
        raw.parse()
            .map_err(|_| self.err(node, format!("attribute `{name}` is not a decimal number: `{raw}`")))
    }

    fn children<'n, 'i>(&self, node: Node<'n, 'i>, tag: &str) -> Result<Vec<Node<'n, 'i>>> {
        let mut out = Vec::new();
        for c in node.children().filter(Node::is_element) {
            if c.tag_name().name() != tag {
                return Err(self.err(
                    c,
                    format!(
                        "unexpected <{}> inside <{}>",
                        c.tag_name().name(),
                        node.tag_name().name()
                    ),
                ));
            }
            out.push(c);
        }
        Ok(out)
    }
}

fn parse_group(cx: &Ctx, node: Node) -> Result<Covergroup> {
    let mut g = Covergroup::new(cx.attr(node, "name")?);
    let mut seen_cross = false;
    for child in node.children().filter(Node::is_element) {
        match child.tag_name().name() {
            "coverpoint" => {
                if seen_cross {
                    return Err(cx.err(child, "<coverpoint> after <cross>"));
                }
                let name = cx.attr(child, "name")?;
                let mut cp = Coverpoint::new(name);
                if let Some(src) = child.attribute("source") {
                    cp = cp.with_source(src);
                }
                for b in cx.children(child, "bin")? {
                    let bin_name = cx.attr(b, "name")?;
                    let lo: i128 = cx.num(b, "lo")?;
                    let hi: i128 = cx.num(b, "hi")?;
                    let matcher = match cx.attr(b, "kind")? {
                        "value" if lo == hi => BinMatcher::Value(lo),
                        "range" => {
                            BinMatcher::Range(Interval::new(lo, hi).map_err(|_| cx.err(b, "range bin with lo > hi"))?)
                        }
                        "set" => {
                            let raw = cx.attr(b, "values")?;
                            let vals: std::result::Result<Vec<i128>, _> = raw.split(',').map(str::parse).collect();
                            BinMatcher::Set(vals.map_err(|_| cx.err(b, "bad `values` list"))?)
                        }
                        other => return Err(cx.err(b, format!("bad bin kind `{other}`"))),
                    };
                    let hits = cx.num(b, "hits")?;
                    let goal: u64 = cx.num(b, "goal")?;
                    if goal == 0 {
                        return Err(cx.err(b, "goal must be at least 1"));
                    }
                    if let Some(w) = b.attribute("weight") {
                        if w != "1" {
                            return Err(cx.err(b, "only weight 1 is supported"));
                        }
                    }
                    cp.bins.push(super::Bin {
                        name: bin_name.to_string(),
                        matcher,
                        hits,
                        goal,
                    });
                }
                g.add_coverpoint(cp).map_err(|e| cx.err(child, e.to_string()))?;
            }
            "cross" => {
                seen_cross = true;
                let name = cx.attr(child, "name")?;
                let members: Vec<&str> = cx.attr(child, "members")?.split('|').collect();
                g.add_cross(name, &members).map_err(|e| cx.err(child, e.to_string()))?;
                let bins = cx.children(child, "bin")?;
                let gi = g.crosses.len() - 1;
                if bins.len() != g.crosses[gi].bin_count() {
                    return Err(cx.err(
                        child,
                        format!(
                            "cross `{name}` lists {} bins, its members define {}",
                            bins.len(),
                            g.crosses[gi].bin_count()
                        ),
                    ));
                }
                for (i, b) in bins.iter().enumerate() {
                    let tuple = cx.attr(*b, "tuple")?;
                    let expected = g.crosses[gi].tuple_label(&g, i);
                    if tuple != expected {
                        return Err(cx.err(*b, format!("expected tuple `{expected}`, found `{tuple}`")));
                    }
                    let hits = cx.num(*b, "hits")?;
                    g.crosses[gi].hits[i] = hits;
                }
            }
            other => return Err(cx.err(child, format!("unexpected <{other}> inside <covergroup>"))),
        }
    }
    Ok(g)
}

/// Parses a coverage database. Errors carry the 1-based line number.
pub fn parse_coverage_db(text: &str) -> Result<CoverageDb> {
    let doc = Document::parse(text).map_err(|e| Error::Xml {
        line: e.pos().row,
        message: e.to_string(),
    })?;
    let cx = Ctx { doc: &doc };
    let root = doc.root_element();
    if root.tag_name().name() != "coverage_db" {
        return Err(cx.err(
            root,
            format!("root element is <{}>, expected <coverage_db>", root.tag_name().name()),
        ));
    }
    let mut db = CoverageDb::new(
        cx.attr(root, "test")?,
        cx.attr(root, "seed")?,
        cx.num(root, "transactions")?,
    );
    for g in cx.children(root, "covergroup")? {
        let group = parse_group(&cx, g)?;
        if db.group(&group.name).is_some() {
            return Err(cx.err(g, format!("duplicate covergroup `{}`", group.name)));
        }
        db.groups.push(group);
    }
    Ok(db)
}

pub fn read_coverage_db(path: &Path) -> Result<CoverageDb> {
    parse_coverage_db(&std::fs::read_to_string(path)?)
}
