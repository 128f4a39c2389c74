//! robots.txt parsing and matching.
//!
//! Implements the original exclusion convention: records of
//! `User-agent` lines followed by `Disallow`/`Allow` lines, matched by
//! path prefix. The record naming our agent wins over `*`. Among the
//! rules of a record the longest matching prefix decides, and Allow
//! wins a tie. Wildcards and crawl-delay are not interpreted.

#[derive(Debug, Clone, PartialEq, Eq)]
struct Rule {
    prefix: String,
    allow: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct Group {
    agents: Vec<String>,
    rules: Vec<Rule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Robots {
    groups: Vec<Group>,
}

impl Robots {
    /// Rules that allow everything, used when a site has no robots.txt.
    pub fn allow_all() -> Self {
        Robots::default()
    }

    /// Rules that forbid everything, used when robots.txt is unavailable
    /// for reasons other than absence (e.g. 401/403).
    pub fn deny_all() -> Self {
        Robots {
            groups: vec![Group { agents: vec!["*".into()], rules: vec![Rule { prefix: "/".into(), allow: false }] }],
        }
    }

    pub fn parse(text: &str) -> Self {
        let mut groups: Vec<Group> = Vec::new();
        let mut current: Option<Group> = None;
        let mut in_agents = false;
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let Some((key, value)) = line.split_once(':') else {
                continue;
            };
            let (key, value) = (key.trim().to_ascii_lowercase(), value.trim());
            match key.as_str() {
                "user-agent" => {
                    if !in_agents {
                        groups.extend(current.take());
                        current = Some(Group::default());
                    }
                    if let Some(g) = current.as_mut() {
                        g.agents.push(value.to_ascii_lowercase());
                    }
                    in_agents = true;
                }
                "disallow" | "allow" => {
                    in_agents = false;
                    let Some(g) = current.as_mut() else { continue };
                    // an empty Disallow allows everything
                    if value.is_empty() {
                        continue;
                    }
                    g.rules.push(Rule { prefix: value.to_string(), allow: key == "allow" });
                }
                _ => in_agents = false,
            }
        }
        groups.extend(current);
        Robots { groups }
    }

    fn group_for(&self, agent: &str) -> Option<&Group> {
        let agent = agent.to_ascii_lowercase();
        let product = agent.split('/').next().unwrap_or("");
        self.groups
            .iter()
            .find(|g| g.agents.iter().any(|a| a != "*" && !a.is_empty() && product.contains(a.as_str())))
            .or_else(|| self.groups.iter().find(|g| g.agents.iter().any(|a| a == "*")))
    }

    /// `path` is the URL path plus query, e.g. `/a/b.html?x=1`.
    pub fn is_allowed(&self, agent: &str, path: &str) -> bool {
        if path == "/robots.txt" {
            return true;
        }
        let Some(group) = self.group_for(agent) else {
            return true;
        };
        group
            .rules
            .iter()
            .filter(|r| path.starts_with(&r.prefix))
            .max_by_key(|r| (r.prefix.len(), r.allow))
            .is_none_or(|r| r.allow)
    }
}
