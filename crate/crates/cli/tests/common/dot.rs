//! Recursive-descent check against the Graphviz DOT language grammar:
//!
//! ```text
//! graph     : [strict] (graph | digraph) [ID] '{' stmt_list '}'
//! stmt_list : [stmt [';'] stmt_list]
//! stmt      : node_stmt | edge_stmt | attr_stmt | ID '=' ID | subgraph
//! attr_stmt : (graph | node | edge) attr_list
//! attr_list : '[' [a_list] ']' [attr_list]
//! a_list    : ID '=' ID [(';' | ',')] [a_list]
//! edge_stmt : (node_id | subgraph) edgeRHS [attr_list]
//! edgeRHS   : edgeop (node_id | subgraph) [edgeRHS]
//! node_stmt : node_id [attr_list]
//! node_id   : ID [port]
//! port      : ':' ID [':' compass_pt] | ':' compass_pt
//! subgraph  : [subgraph [ID]] '{' stmt_list '}'
//! ```

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Id(String),
    Punct(char),
    Edge(&'static str),
}

fn lex(src: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '/' && chars.get(i + 1) == Some(&'/') || c == '#' && (i == 0 || chars[i - 1] == '\n') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
        } else if c == '/' && chars.get(i + 1) == Some(&'*') {
            i += 2;
            while i + 1 < chars.len() && !(chars[i] == '*' && chars[i + 1] == '/') {
                i += 1;
            }
            if i + 1 >= chars.len() {
                return Err("unterminated comment".into());
            }
            i += 2;
        } else if "{}[];,=:".contains(c) {
            out.push(Tok::Punct(c));
            i += 1;
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push(Tok::Edge("->"));
            i += 2;
        } else if c == '-' && chars.get(i + 1) == Some(&'-') {
            out.push(Tok::Edge("--"));
            i += 2;
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err("unterminated string".into()),
                    Some('"') => break,
                    Some('\\') if i + 1 < chars.len() => {
                        s.push(chars[i]);
                        s.push(chars[i + 1]);
                        i += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            i += 1;
            out.push(Tok::Id(s));
        } else if c == '<' {
            let mut depth = 0;
            let start = i;
            while i < chars.len() {
                match chars[i] {
                    '<' => depth += 1,
                    '>' => {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    _ => {}
                }
                i += 1;
            }
            if i >= chars.len() {
                return Err("unterminated HTML string".into());
            }
            i += 1;
            out.push(Tok::Id(chars[start..i].iter().collect()));
        } else if c.is_ascii_digit() || c == '.' || c == '-' {
            // Numeral: [-]?(.[0-9]+ | [0-9]+(.[0-9]*)?)
            let start = i;
            if c == '-' {
                i += 1;
            }
            let mut digits = 0;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
                digits += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                    digits += 1;
                }
            }
            if digits == 0 {
                return Err(format!("bad numeral at offset {start}"));
            }
            if i < chars.len() && (chars[i].is_alphabetic() || chars[i] == '_') {
                return Err(format!("identifier cannot start with a digit at offset {start}"));
            }
            out.push(Tok::Id(chars[start..i].iter().collect()));
        } else if c.is_alphabetic() || c == '_' || (c as u32) >= 0x80 {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || (chars[i] as u32) >= 0x80) {
                i += 1;
            }
            out.push(Tok::Id(chars[start..i].iter().collect()));
        } else {
            return Err(format!("unexpected character {c:?} at offset {i}"));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    edgeop: &'static str,
}

fn keyword(t: &Tok, kw: &str) -> bool {
    matches!(t, Tok::Id(s) if s.eq_ignore_ascii_case(kw))
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k)
    }

    fn punct(&mut self, c: char) -> Result<(), String> {
        match self.peek() {
            Some(Tok::Punct(p)) if *p == c => {
                self.pos += 1;
                Ok(())
            }
            other => Err(format!("expected {c:?}, found {other:?} at token {}", self.pos)),
        }
    }

    fn is_punct(&self, c: char) -> bool {
        matches!(self.peek(), Some(Tok::Punct(p)) if *p == c)
    }

    fn id(&mut self) -> Result<String, String> {
        match self.peek() {
            Some(Tok::Id(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            other => Err(format!("expected ID, found {other:?} at token {}", self.pos)),
        }
    }

    fn graph(&mut self) -> Result<(), String> {
        if self.peek().is_some_and(|t| keyword(t, "strict")) {
            self.pos += 1;
        }
        match self.peek() {
            Some(t) if keyword(t, "digraph") => self.edgeop = "->",
            Some(t) if keyword(t, "graph") => self.edgeop = "--",
            other => return Err(format!("expected graph or digraph, found {other:?}")),
        }
        self.pos += 1;
        if matches!(self.peek(), Some(Tok::Id(_))) {
            self.pos += 1;
        }
        self.punct('{')?;
        self.stmt_list()?;
        self.punct('}')?;
        if self.pos != self.toks.len() {
            return Err(format!("trailing tokens after graph at token {}", self.pos));
        }
        Ok(())
    }

    fn stmt_list(&mut self) -> Result<(), String> {
        while !self.is_punct('}') {
            if self.peek().is_none() {
                return Err("unexpected end of input".into());
            }
            self.stmt()?;
            if self.is_punct(';') {
                self.pos += 1;
            }
        }
        Ok(())
    }

    fn stmt(&mut self) -> Result<(), String> {
        let t = self.peek().cloned().ok_or("unexpected end")?;
        if keyword(&t, "graph") || keyword(&t, "node") || keyword(&t, "edge") {
            self.pos += 1;
            return self.attr_list();
        }
        if matches!(t, Tok::Id(_)) && matches!(self.peek_at(1), Some(Tok::Punct('='))) {
            self.pos += 1;
            self.punct('=')?;
            self.id()?;
            return Ok(());
        }
        self.endpoint()?;
        if matches!(self.peek(), Some(Tok::Edge(_))) {
            while let Some(Tok::Edge(op)) = self.peek() {
                if *op != self.edgeop {
                    return Err(format!("edge operator {op} in a graph using {}", self.edgeop));
                }
                self.pos += 1;
                self.endpoint()?;
            }
        }
        if self.is_punct('[') {
            self.attr_list()?;
        }
        Ok(())
    }

    fn endpoint(&mut self) -> Result<(), String> {
        let t = self.peek().cloned().ok_or("unexpected end")?;
        if keyword(&t, "subgraph") || t == Tok::Punct('{') {
            if keyword(&t, "subgraph") {
                self.pos += 1;
                if matches!(self.peek(), Some(Tok::Id(_))) {
                    self.pos += 1;
                }
            }
            self.punct('{')?;
            self.stmt_list()?;
            return self.punct('}');
        }
        self.id()?;
        if self.is_punct(':') {
            self.pos += 1;
            self.id()?;
            if self.is_punct(':') {
                self.pos += 1;
                self.id()?;
            }
        }
        Ok(())
    }

    fn attr_list(&mut self) -> Result<(), String> {
        self.punct('[')?;
        while !self.is_punct(']') {
            self.id()?;
            self.punct('=')?;
            self.id()?;
            if self.is_punct(',') || self.is_punct(';') {
                self.pos += 1;
            }
        }
        self.punct(']')?;
        if self.is_punct('[') {
            return self.attr_list();
        }
        Ok(())
    }
}

/// `Ok(())` when `src` is a syntactically valid DOT graph.
pub fn check_dot(src: &str) -> Result<(), String> {
    let toks = lex(src)?;
    Parser { toks, pos: 0, edgeop: "->" }.graph()
}

#[allow(dead_code)]
pub fn self_test() {
    assert!(check_dot("digraph g {}").is_ok());
    assert!(check_dot("graph { a -- b -- c; d [label=\"x\\\"y\"]; }").is_ok());
    assert!(check_dot("strict digraph { node [shape=box]; a:p:n -> {b c} [w=1.5]; x=y }").is_ok());
    assert!(check_dot("digraph { a -- b }").is_err());
    assert!(check_dot("digraph { a -> }").is_err());
    assert!(check_dot("digraph { a [label=] }").is_err());
    assert!(check_dot("digraph { 1abc }").is_err());
    assert!(check_dot("digraph { a } }").is_err());
    assert!(check_dot("digraph { a").is_err());
}
