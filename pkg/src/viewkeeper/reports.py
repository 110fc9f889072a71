"""TSV reports: glue decisions and merged-set counts beside published figures."""

from __future__ import annotations

from typing import Sequence

from .gluing import GlueDecision, MergedAvSet

# Published merged-set sizes for the results_IT / results_BBA pair.
PUBLISHED_WITH_RI = {"Department": 2, "Student": 240, "Courses": 8}
PUBLISHED_WITHOUT_RI = {"Department": 2, "Student": 6000, "Courses": 200}
PUBLISHED_LABELS = {"Department": "aux_Dep12", "Student": "aux_Std12", "Courses": "aux_Course12"}


def decisions_tsv(decisions: Sequence[GlueDecision]) -> str:
    lines = [GlueDecision.TSV_HEADER, *(d.tsv() for d in decisions)]
    return "\n".join(lines) + "\n"


def merged_counts_tsv(plan: MergedAvSet, ri_pruning: bool = True) -> str:
    """Per relation: parent sizes, their sum, the glued size, and the published figure.

    ``delta`` is glued minus published and ``sum_delta`` is the separate sum
    minus published. The published sizes count tuples without duplicate
    elimination in one case and with it in the other, so both are shown.
    """
    published = PUBLISHED_WITH_RI if ri_pruning else PUBLISHED_WITHOUT_RI
    lines = ["av\trelation\tn1\tn2\tseparate_sum\tglued\tpublished\tdelta\tsum_delta"]
    totals = [0, 0, 0, 0, 0]
    published_total = 0
    for d in plan.decisions:
        label = PUBLISHED_LABELS.get(d.relation, f"aux_{d.relation}12")
        sep = d.n1 + d.n2
        ref = published.get(d.relation)
        cells = [label, d.relation, d.n1, d.n2, sep, d.glued_count]
        if ref is None:
            cells += ["-", "-", "-"]
        else:
            cells += [ref, d.glued_count - ref, sep - ref]
            published_total += ref
        for i, v in enumerate((d.n1, d.n2, sep, d.glued_count)):
            totals[i] += v
        lines.append("\t".join(str(c) for c in cells))
    scored = [d for d in plan.decisions if d.relation in published]
    glued_scored = sum(d.glued_count for d in scored)
    sum_scored = sum(d.n1 + d.n2 for d in scored)
    lines.append(
        "\t".join(
            str(c)
            for c in (
                "TOTAL", "-", totals[0], totals[1], totals[2], totals[3],
                published_total, glued_scored - published_total, sum_scored - published_total,
            )
        )
    )
    return "\n".join(lines) + "\n"
