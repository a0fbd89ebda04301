// SPDX-License-Identifier: Apache-2.0

//! Structural netlist front-end.
//!
//! Accepted grammar (whitespace-insensitive, `//` and `/* */` comments):
//!
//! ```text
//! design   := module+
//! module   := "module" ID "(" [portdecl ("," portdecl)*] ")" ";" (wiredecl | instance)* "endmodule"
//! portdecl := ["input" | "output"] ID        // direction inherited when omitted
//! wiredecl := "wire" ID ("," ID)* ";"
//! instance := ID ID "(" [conn ("," conn)*] ")" ";"
//! conn     := "." ID "(" ID ")" | ID
//! ```
//!
//! Positional connections are resolved to named ones by the master's port
//! order, so every [`Instance`] in a parsed [`NetlistSource`] carries named
//! connections only.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::gate::GateType;
use super::NetlistError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetlistSource {
    pub modules: Vec<ModuleDef>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleDef {
    pub name: String,
    pub ports: Vec<Port>,
    pub wires: Vec<String>,
    pub instances: Vec<Instance>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PortDir {
    Input,
    Output,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Port {
    pub name: String,
    pub dir: PortDir,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub master: String,
    pub name: String,
    pub connections: Vec<Connection>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connection {
    pub pin: String,
    pub net: String,
}

impl NetlistSource {
    pub fn module(&self, name: &str) -> Option<&ModuleDef> {
        self.modules.iter().find(|m| m.name == name)
    }

    pub fn instance_count(&self) -> usize {
        self.modules.iter().map(|m| m.instances.len()).sum()
    }
}

impl Instance {
    pub fn net_of(&self, pin: &str) -> Option<&str> {
        self.connections.iter().find(|c| c.pin == pin).map(|c| c.net.as_str())
    }
}

pub fn parse_netlist(text: &str) -> Result<NetlistSource, NetlistError> {
    let tokens = tokenize(text)?;
    let raw = Parser { tokens, pos: 0 }.design()?;
    resolve(raw)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Semi,
    Comma,
    Dot,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

struct Cursor {
    chars: Vec<char>,
    i: usize,
    line: usize,
    column: usize,
}

impl Cursor {
    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.i + ahead).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek(0)?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

fn tokenize(text: &str) -> Result<Vec<Token>, NetlistError> {
    let mut cur = Cursor {
        chars: text.chars().collect(),
        i: 0,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    while let Some(c) = cur.peek(0) {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '/' && cur.peek(1) == Some('/') {
            while cur.peek(0).is_some_and(|c| c != '\n') {
                cur.bump();
            }
            continue;
        }
        if c == '/' && cur.peek(1) == Some('*') {
            let (sl, sc) = (cur.line, cur.column);
            cur.bump();
            cur.bump();
            loop {
                match (cur.peek(0), cur.peek(1)) {
                    (Some('*'), Some('/')) => {
                        cur.bump();
                        cur.bump();
                        break;
                    }
                    (Some(_), _) => {
                        cur.bump();
                    }
                    (None, _) => return Err(syntax(sl, sc, "unterminated block comment")),
                }
            }
            continue;
        }
        let (line, column) = (cur.line, cur.column);
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ';' => Tok::Semi,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(c) = cur
                    .peek(0)
                    .filter(|c| c.is_ascii_alphanumeric() || *c == '_' || *c == '$')
                {
                    s.push(c);
                    cur.bump();
                }
                out.push(Token {
                    tok: Tok::Ident(s),
                    line,
                    column,
                });
                continue;
            }
            other => return Err(syntax(line, column, &format!("unexpected character `{other}`"))),
        };
        cur.bump();
        out.push(Token { tok, line, column });
    }
    out.push(Token {
        tok: Tok::Eof,
        line: cur.line,
        column: cur.column,
    });
    Ok(out)
}

fn syntax(line: usize, column: usize, message: &str) -> NetlistError {
    NetlistError::Syntax {
        line,
        column,
        message: message.to_string(),
    }
}

enum RawConn {
    Named(String, String),
    Positional(String),
}

struct RawInstance {
    master: String,
    name: String,
    conns: Vec<RawConn>,
}

struct RawModule {
    name: String,
    ports: Vec<Port>,
    wires: Vec<String>,
    instances: Vec<RawInstance>,
}

const KEYWORDS: [&str; 5] = ["module", "endmodule", "input", "output", "wire"];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, message: &str) -> NetlistError {
        let t = self.peek();
        syntax(t.line, t.column, message)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), NetlistError> {
        if self.peek().tok == want {
            self.next();
            Ok(())
        } else {
            Err(self.err_here(&format!("expected {what}")))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self, what: &str) -> Result<String, NetlistError> {
        match &self.peek().tok {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.next();
                Ok(s)
            }
            _ => Err(self.err_here(&format!("expected {what}"))),
        }
    }

    fn design(mut self) -> Result<Vec<(RawModule, usize, usize)>, NetlistError> {
        let mut modules = Vec::new();
        while self.peek().tok != Tok::Eof {
            let t = self.peek().clone();
            if !self.is_keyword("module") {
                return Err(self.err_here("expected `module`"));
            }
            self.next();
            modules.push((self.module()?, t.line, t.column));
        }
        if modules.is_empty() {
            return Err(self.err_here("expected at least one module"));
        }
        Ok(modules)
    }

    fn module(&mut self) -> Result<RawModule, NetlistError> {
        let name = self.ident("module name")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut ports = Vec::new();
        if self.peek().tok != Tok::RParen {
            let mut dir: Option<PortDir> = None;
            loop {
                if self.is_keyword("input") {
                    self.next();
                    dir = Some(PortDir::Input);
                } else if self.is_keyword("output") {
                    self.next();
                    dir = Some(PortDir::Output);
                }
                let Some(d) = dir else {
                    return Err(self.err_here("expected `input` or `output`"));
                };
                let pname = self.ident("port name")?;
                ports.push(Port { name: pname, dir: d });
                if self.peek().tok == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        self.expect(Tok::Semi, "`;`")?;

        let mut wires = Vec::new();
        let mut instances = Vec::new();
        loop {
            if self.is_keyword("endmodule") {
                self.next();
                break;
            }
            if self.peek().tok == Tok::Eof {
                return Err(self.err_here("expected `endmodule`"));
            }
            if self.is_keyword("wire") {
                self.next();
                loop {
                    wires.push(self.ident("wire name")?);
                    if self.peek().tok == Tok::Comma {
                        self.next();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::Semi, "`;`")?;
                continue;
            }
            instances.push(self.instance()?);
        }
        Ok(RawModule {
            name,
            ports,
            wires,
            instances,
        })
    }

    fn instance(&mut self) -> Result<RawInstance, NetlistError> {
        let master = self.ident("master name")?;
        let name = self.ident("instance name")?;
        self.expect(Tok::LParen, "`(`")?;
        let mut conns = Vec::new();
        if self.peek().tok != Tok::RParen {
            loop {
                if self.peek().tok == Tok::Dot {
                    self.next();
                    let pin = self.ident("pin name")?;
                    self.expect(Tok::LParen, "`(`")?;
                    let net = self.ident("net name")?;
                    self.expect(Tok::RParen, "`)`")?;
                    if matches!(conns.last(), Some(RawConn::Positional(_))) {
                        return Err(self.err_here("mixed named and positional connections"));
                    }
                    conns.push(RawConn::Named(pin, net));
                } else {
                    let net = self.ident("net name")?;
                    if matches!(conns.last(), Some(RawConn::Named(..))) {
                        return Err(self.err_here("mixed named and positional connections"));
                    }
                    conns.push(RawConn::Positional(net));
                }
                if self.peek().tok == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        self.expect(Tok::Semi, "`;`")?;
        Ok(RawInstance { master, name, conns })
    }
}

fn resolve(raw: Vec<(RawModule, usize, usize)>) -> Result<NetlistSource, NetlistError> {
    let mut port_orders: HashMap<String, Vec<String>> = HashMap::new();
    for (m, _, _) in &raw {
        if GateType::from_name(&m.name).is_some() || port_orders.contains_key(&m.name) {
            return Err(NetlistError::DuplicateModule(m.name.clone()));
        }
        port_orders.insert(m.name.clone(), m.ports.iter().map(|p| p.name.clone()).collect());
    }

    let mut modules = Vec::with_capacity(raw.len());
    for (m, _, _) in raw {
        let mut declared: HashSet<&str> = HashSet::new();
        for name in m
            .ports
            .iter()
            .map(|p| p.name.as_str())
            .chain(m.wires.iter().map(String::as_str))
        {
            if !declared.insert(name) {
                return Err(NetlistError::DuplicateDeclaration {
                    module: m.name.clone(),
                    name: name.to_string(),
                });
            }
        }
        let mut inst_names: HashSet<&str> = HashSet::new();
        let mut instances = Vec::with_capacity(m.instances.len());
        for inst in &m.instances {
            if !inst_names.insert(inst.name.as_str()) {
                return Err(NetlistError::DuplicateDeclaration {
                    module: m.name.clone(),
                    name: inst.name.clone(),
                });
            }
            let pins: Vec<String> = match GateType::from_name(&inst.master) {
                Some(g) => g.pins().map(str::to_string).collect(),
                None => port_orders
                    .get(&inst.master)
                    .cloned()
                    .ok_or_else(|| NetlistError::UnknownMaster(inst.master.clone()))?,
            };
            let bad = |message: String| NetlistError::BadInstance {
                module: m.name.clone(),
                instance: inst.name.clone(),
                message,
            };
            let mut connections = Vec::with_capacity(inst.conns.len());
            let positional = matches!(inst.conns.first(), Some(RawConn::Positional(_)));
            if positional && inst.conns.len() != pins.len() {
                return Err(bad(format!(
                    "{} positional connections for {} ports of `{}`",
                    inst.conns.len(),
                    pins.len(),
                    inst.master
                )));
            }
            for (k, conn) in inst.conns.iter().enumerate() {
                let (pin, net) = match conn {
                    RawConn::Named(p, n) => (p.clone(), n.clone()),
                    RawConn::Positional(n) => (pins[k].clone(), n.clone()),
                };
                if !pins.contains(&pin) {
                    return Err(bad(format!("`{}` has no port `{pin}`", inst.master)));
                }
                if connections.iter().any(|c: &Connection| c.pin == pin) {
                    return Err(bad(format!("port `{pin}` connected twice")));
                }
                if !declared.contains(net.as_str()) {
                    return Err(NetlistError::UndeclaredNet {
                        module: m.name.clone(),
                        net,
                    });
                }
                connections.push(Connection { pin, net });
            }
            if let Some(missing) = pins.iter().find(|p| !connections.iter().any(|c| &c.pin == *p)) {
                return Err(bad(format!("port `{missing}` is not connected")));
            }
            instances.push(Instance {
                master: inst.master.clone(),
                name: inst.name.clone(),
                connections,
            });
        }
        modules.push(ModuleDef {
            name: m.name,
            ports: m.ports,
            wires: m.wires,
            instances,
        });
    }
    Ok(NetlistSource { modules })
}

impl fmt::Display for PortDir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PortDir::Input => "input",
            PortDir::Output => "output",
        })
    }
}

impl fmt::Display for ModuleDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "module {}(", self.name)?;
        for (k, p) in self.ports.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{} {}", p.dir, p.name)?;
        }
        writeln!(f, ");")?;
        if !self.wires.is_empty() {
            writeln!(f, "  wire {};", self.wires.join(", "))?;
        }
        for inst in &self.instances {
            write!(f, "  {} {}(", inst.master, inst.name)?;
            for (k, c) in inst.connections.iter().enumerate() {
                if k > 0 {
                    f.write_str(", ")?;
                }
                write!(f, ".{}({})", c.pin, c.net)?;
            }
            writeln!(f, ");")?;
        }
        writeln!(f, "endmodule")
    }
}

impl fmt::Display for NetlistSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, m) in self.modules.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{m}")?;
        }
        Ok(())
    }
}
