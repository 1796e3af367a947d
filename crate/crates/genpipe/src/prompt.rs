//! Prompt assembly and response extraction.

use powl_bpmn::dsl::GRAMMAR;

pub struct Example {
    pub description: &'static str,
    pub program: &'static str,
}

/// Few-shot pairs. The second spans two pools, so its compiled diagram has
/// message flows.
pub const EXAMPLES: &[Example] = &[
    Example {
        description: "An employee submits an expense claim. A manager then either approves or \
rejects it. In both cases finance notifies the employee of the outcome.",
        program: r#"process "Expense Claim" {
  po claim {
    act submit "Submit Expense Claim" @ "Company" / "Employee"
    choice review {
      act approve "Approve Claim" @ "Company" / "Manager"
      act reject "Reject Claim" @ "Company" / "Manager"
      edges { start -> approve  start -> reject  approve -> end  reject -> end }
    }
    act notify "Notify Employee" @ "Company" / "Finance"
    order { submit -> review  review -> notify }
  }
}"#,
    },
    Example {
        description: "A customer places an order with a supplier. The supplier's sales team \
checks stock while the warehouse prepares packaging. Quality control inspects the goods and \
sends them back to repair until they pass. The warehouse ships the goods, the customer \
receives them and the supplier's sales team issues the invoice.",
        program: r#"process "Order Fulfilment" {
  po main {
    act place "Place Order" @ "Customer" / "Purchasing"
    act check "Check Stock" @ "Supplier" / "Sales"
    act pack "Prepare Packaging" @ "Supplier" / "Warehouse"
    choice qc {
      act inspect "Inspect Goods" @ "Supplier" / "Quality"
      act repair "Repair Goods" @ "Supplier" / "Quality"
      edges { start -> inspect  inspect -> end  inspect -> repair  repair -> inspect }
    }
    act ship "Ship Goods" @ "Supplier" / "Warehouse"
    act receive "Receive Goods" @ "Customer" / "Purchasing"
    act invoice "Issue Invoice" @ "Supplier" / "Sales"
    order {
      place -> check  place -> pack
      check -> qc  pack -> qc
      qc -> ship  ship -> receive  ship -> invoice
    }
  }
}"#,
    },
];

/// What went wrong last time, fed back verbatim.
#[derive(Debug, Clone, Default)]
pub struct Feedback {
    pub previous_output: String,
    pub errors: Vec<String>,
}

pub fn build_prompt(description: &str, feedback: Option<&Feedback>) -> String {
    let mut p = String::new();
    p.push_str(
        "You write business process models in a small textual language. \
Translate the process description below into one program.\n\n",
    );
    p.push_str("Grammar:\n```\n");
    p.push_str(GRAMMAR);
    p.push_str("\n```\n\n");
    p.push_str(
        "Rules:\n\
- Every activity (act) must carry a pool and a lane: `@ \"Pool\" / \"Lane\"`. \
A pool is an organisation or participant, a lane is a role or department inside it.\n\
- Use `po` for steps that may run in parallel, constrained by `order`; \
use `choice` for exclusive alternatives and loops.\n\
- Inside `choice`, every child must lie on a path from `start` to `end`.\n\
- Ids must be unique. Do not invent pools for purely internal steps.\n\
- Answer with exactly one fenced code block containing the program and nothing else.\n\n",
    );
    for (i, ex) in EXAMPLES.iter().enumerate() {
        p.push_str(&format!(
            "Example {}\nDescription: {}\n```powl\n{}\n```\n\n",
            i + 1,
            ex.description,
            ex.program
        ));
    }
    p.push_str("Description:\n");
    p.push_str(description.trim());
    p.push('\n');
    if let Some(fb) = feedback {
        p.push_str("\nYour previous answer was:\n");
        p.push_str(&fb.previous_output);
        if !fb.previous_output.ends_with('\n') {
            p.push('\n');
        }
        p.push_str("\nIt was rejected with these errors:\n");
        for e in &fb.errors {
            p.push_str("- ");
            p.push_str(e);
            p.push('\n');
        }
        p.push_str("\nRepair the program so that all errors are fixed and answer again with a single fenced code block.\n");
    }
    p
}

/// Body of the first fenced code block.
pub fn extract_code_block(response: &str) -> Result<String, String> {
    let open = response
        .find("```")
        .ok_or_else(|| "no fenced code block found in the response".to_string())?;
    let after = &response[open + 3..];
    // skip the info string
    let body_start = after.find('\n').map(|i| i + 1).unwrap_or(after.len());
    let body = &after[body_start..];
    let close = body
        .find("```")
        .ok_or_else(|| "fenced code block is not closed".to_string())?;
    let code = body[..close].trim_end();
    if code.trim().is_empty() {
        return Err("fenced code block is empty".into());
    }
    Ok(code.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_prompt_has_no_repair_section() {
        let p = build_prompt("A clerk files a form.", None);
        assert!(p.contains(GRAMMAR));
        assert!(p.contains("must carry a pool and a lane"));
        assert!(!p.contains("rejected with these errors"));
        assert!(p.ends_with("A clerk files a form.\n"));
    }

    #[test]
    fn repair_section_lists_errors_verbatim() {
        let fb = Feedback {
            previous_output: "process \"x\" {".into(),
            errors: vec!["1:14: unexpected end of input".into(), "a2: unknown child".into()],
        };
        let p = build_prompt("d", Some(&fb));
        assert!(p.contains("- 1:14: unexpected end of input\n"));
        assert!(p.contains("- a2: unknown child\n"));
        assert!(p.contains("process \"x\" {"));
        assert!(p.contains("Repair the program"));
    }

    #[test]
    fn code_blocks() {
        assert_eq!(extract_code_block("hi\n```powl\nabc\n```\n```\nx\n```").unwrap(), "abc");
        assert_eq!(extract_code_block("```\n  a\n b \n```").unwrap(), "  a\n b");
        assert!(extract_code_block("no code").is_err());
        assert!(extract_code_block("```powl\nabc").is_err());
        assert!(extract_code_block("```\n\n```").is_err());
    }
}
