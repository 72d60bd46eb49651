/**
 * Shared plan fixtures, captured verbatim from the session service's wire
 * format for the reference five-node arithmetic plan.
 */

import type { PlanDoc } from "../src/api.js";

export function demoPlan(): PlanDoc {
  return JSON.parse(JSON.stringify(DEMO_PLAN)) as PlanDoc;
}

export function executedPlan(): PlanDoc {
  return JSON.parse(JSON.stringify(EXECUTED_PLAN)) as PlanDoc;
}

const DEMO_PLAN: PlanDoc = {
  "nodes": [
    {
      "id": 1,
      "task": "Compute pair_sum as first_value plus second_value and pair_diff as first_value minus second_value {{expr pair_sum: first_value + second_value}} {{expr pair_diff: first_value - second_value}}",
      "agent_name": "math",
      "input": [
        {
          "variable": "first_value",
          "value": "12"
        },
        {
          "variable": "second_value",
          "value": "8"
        }
      ],
      "output": [
        "pair_sum",
        "pair_diff"
      ],
      "prereq": []
    },
    {
      "id": 2,
      "task": "Compute double_sum as pair_sum times scale_factor {{expr double_sum: pair_sum * scale_factor}}",
      "agent_name": "math",
      "input": [
        {
          "variable": "pair_sum",
          "value": ""
        },
        {
          "variable": "scale_factor",
          "value": "3"
        }
      ],
      "output": [
        "double_sum"
      ],
      "prereq": [
        1
      ]
    },
    {
      "id": 3,
      "task": "Compute square_diff as pair_diff times pair_diff {{expr square_diff: pair_diff * pair_diff}}",
      "agent_name": "math",
      "input": [
        {
          "variable": "pair_diff",
          "value": ""
        }
      ],
      "output": [
        "square_diff"
      ],
      "prereq": [
        1
      ]
    },
    {
      "id": 4,
      "task": "Compute combo_value as double_sum plus square_diff {{expr combo_value: double_sum + square_diff}}",
      "agent_name": "math",
      "input": [
        {
          "variable": "double_sum",
          "value": ""
        },
        {
          "variable": "square_diff",
          "value": ""
        }
      ],
      "output": [
        "combo_value"
      ],
      "prereq": [
        2,
        3
      ]
    },
    {
      "id": 5,
      "task": "Compute final_value as combo_value minus pair_sum {{expr final_value: combo_value - pair_sum}}",
      "agent_name": "math",
      "input": [
        {
          "variable": "combo_value",
          "value": ""
        },
        {
          "variable": "pair_sum",
          "value": ""
        }
      ],
      "output": [
        "final_value"
      ],
      "prereq": [
        1,
        4
      ]
    }
  ],
  "edges": [
    {
      "src_node": 1,
      "dest_node": 2,
      "src_output": "pair_sum",
      "dest_input": "pair_sum"
    },
    {
      "src_node": 1,
      "dest_node": 3,
      "src_output": "pair_diff",
      "dest_input": "pair_diff"
    },
    {
      "src_node": 1,
      "dest_node": 5,
      "src_output": "pair_sum",
      "dest_input": "pair_sum"
    },
    {
      "src_node": 2,
      "dest_node": 4,
      "src_output": "double_sum",
      "dest_input": "double_sum"
    },
    {
      "src_node": 3,
      "dest_node": 4,
      "src_output": "square_diff",
      "dest_input": "square_diff"
    },
    {
      "src_node": 4,
      "dest_node": 5,
      "src_output": "combo_value",
      "dest_input": "combo_value"
    }
  ],
  "next_id": 6
};

const EXECUTED_PLAN: PlanDoc = {
  "nodes": [
    {
      "id": 1,
      "task": "Compute pair_sum as first_value plus second_value and pair_diff as first_value minus second_value {{expr pair_sum: first_value + second_value}} {{expr pair_diff: first_value - second_value}}",
      "agent_name": "math",
      "input": [
        {
          "variable": "first_value",
          "value": "12"
        },
        {
          "variable": "second_value",
          "value": "8"
        }
      ],
      "output": [
        "pair_sum",
        "pair_diff"
      ],
      "prereq": [],
      "status": "succeeded",
      "trace": {
        "agent": "math",
        "raw_log": "pair_sum = first_value + second_value = 20.0; pair_diff = first_value - second_value = 4.0",
        "structured": {
          "expressions": {
            "pair_sum": "first_value + second_value",
            "pair_diff": "first_value - second_value"
          },
          "environment": {
            "first_value": 12.0,
            "second_value": 8.0
          }
        },
        "values": {
          "pair_sum": 20.0,
          "pair_diff": 4.0
        }
      }
    },
    {
      "id": 2,
      "task": "Compute double_sum as pair_sum times scale_factor {{expr double_sum: pair_sum * scale_factor}}",
      "agent_name": "math",
      "input": [
        {
          "variable": "pair_sum",
          "value": ""
        },
        {
          "variable": "scale_factor",
          "value": "3"
        }
      ],
      "output": [
        "double_sum"
      ],
      "prereq": [
        1
      ],
      "status": "succeeded",
      "trace": {
        "agent": "math",
        "raw_log": "double_sum = pair_sum * scale_factor = 60.0",
        "structured": {
          "expressions": {
            "double_sum": "pair_sum * scale_factor"
          },
          "environment": {
            "pair_sum": 20.0,
            "scale_factor": 3.0
          }
        },
        "values": {
          "double_sum": 60.0
        }
      }
    },
    {
      "id": 3,
      "task": "Compute square_diff as pair_diff times pair_diff {{expr square_diff: pair_diff * pair_diff}}",
      "agent_name": "math",
      "input": [
        {
          "variable": "pair_diff",
          "value": ""
        }
      ],
      "output": [
        "square_diff"
      ],
      "prereq": [
        1
      ],
      "status": "succeeded",
      "trace": {
        "agent": "math",
        "raw_log": "square_diff = pair_diff * pair_diff = 16.0",
        "structured": {
          "expressions": {
            "square_diff": "pair_diff * pair_diff"
          },
          "environment": {
            "pair_diff": 4.0
          }
        },
        "values": {
          "square_diff": 16.0
        }
      }
    },
    {
      "id": 4,
      "task": "Compute combo_value as double_sum plus square_diff {{expr combo_value: double_sum + square_diff}}",
      "agent_name": "math",
      "input": [
        {
          "variable": "double_sum",
          "value": ""
        },
        {
          "variable": "square_diff",
          "value": ""
        }
      ],
      "output": [
        "combo_value"
      ],
      "prereq": [
        2,
        3
      ],
      "status": "succeeded",
      "trace": {
        "agent": "math",
        "raw_log": "combo_value = double_sum + square_diff = 76.0",
        "structured": {
          "expressions": {
            "combo_value": "double_sum + square_diff"
          },
          "environment": {
            "double_sum": 60.0,
            "square_diff": 16.0
          }
        },
        "values": {
          "combo_value": 76.0
        }
      }
    },
    {
      "id": 5,
      "task": "Compute final_value as combo_value minus pair_sum {{expr final_value: combo_value - pair_sum}}",
      "agent_name": "math",
      "input": [
        {
          "variable": "combo_value",
          "value": ""
        },
        {
          "variable": "pair_sum",
          "value": ""
        }
      ],
      "output": [
        "final_value"
      ],
      "prereq": [
        1,
        4
      ],
      "status": "succeeded",
      "trace": {
        "agent": "math",
        "raw_log": "final_value = combo_value - pair_sum = 56.0",
        "structured": {
          "expressions": {
            "final_value": "combo_value - pair_sum"
          },
          "environment": {
            "combo_value": 76.0,
            "pair_sum": 20.0
          }
        },
        "values": {
          "final_value": 56.0
        }
      }
    }
  ],
  "edges": [
    {
      "src_node": 1,
      "dest_node": 2,
      "src_output": "pair_sum",
      "dest_input": "pair_sum"
    },
    {
      "src_node": 1,
      "dest_node": 3,
      "src_output": "pair_diff",
      "dest_input": "pair_diff"
    },
    {
      "src_node": 1,
      "dest_node": 5,
      "src_output": "pair_sum",
      "dest_input": "pair_sum"
    },
    {
      "src_node": 2,
      "dest_node": 4,
      "src_output": "double_sum",
      "dest_input": "double_sum"
    },
    {
      "src_node": 3,
      "dest_node": 4,
      "src_output": "square_diff",
      "dest_input": "square_diff"
    },
    {
      "src_node": 4,
      "dest_node": 5,
      "src_output": "combo_value",
      "dest_input": "combo_value"
    }
  ],
  "next_id": 6
};
