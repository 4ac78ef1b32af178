"""Demo corpus: the IEE MF/2-style generic document and three drafted plants.

``build_mf2`` produces the template fixture used throughout the test suite
and the demo store: twenty parts (ten optional), the Time for Completion
sections with two alternative wordings of the extension clause, the
parameterized equipment-list clause, three wordings of the payment terms,
and the structural constraints (sub-contracting liability, foreign
currency, non-identical parties, one cross-reference).

``install_demo_store`` seeds a store with that generic plus three final
instances — R1 "Paris Plant 1992", R2 "Southampton Plant 1993", and
R3 "Oxford Plant 1994" — wired so the classic compound query (research
contracts before December 1994 with a French party containing payment
terms version 3) returns exactly R1.
"""

from __future__ import annotations

import datetime as dt

from . import constraints as con
from .condexpr import parse_cond
from .model import (
    DocumentInstance,
    GenericDocument,
    Inclusion,
    MemoryFragments,
    ParamBinding,
    ParamKind,
    ParamSpec,
    Party,
    Status,
    Tag,
    TagKind,
    TextVersion,
    UnitPath,
    UnitTemplate,
    default_selections,
    walk_units,
)

MF2 = "IEE MF/2"

_MODEL_DATE = dt.date(1988, 1, 1)
_REVISION_DATE = dt.date(1991, 6, 1)

EQUIPMENT = UnitPath.of("Contractor's Obligations", "Contractor's Equipment")
RATE_OF_PROGRESS = UnitPath.of("Contractor's Obligations", "Rate of Progress")
EXTENSION = UnitPath.of("Time for Completion", "Extension of Time for Completion")
PAYMENT_TERMS = UnitPath.of("Certificates and Payment", "Payment Terms")
FOREIGN_CURRENCY = UnitPath.of("Certificates and Payment", "Foreign Currency Payments")
ASSIGNMENT_PART = UnitPath.of("Assignment and Sub-Contracting")
SUBCONTRACTORS_LIABILITY = UnitPath.of("Assignment and Sub-Contracting", "Sub-Contractors Liability")
PRECEDENCE = UnitPath.of("Precedence of Documents")


def build_mf2() -> tuple[GenericDocument, MemoryFragments]:
    fragments = MemoryFragments()

    def version(number, text, commentary="", params=(), author="IEE model form", created=_MODEL_DATE):
        return TextVersion(
            number=number,
            fragment=fragments.put_fragment(text),
            params=tuple(params),
            commentary=commentary,
            author=author,
            created=created,
        )

    def atomic(label, inclusion, order, versions, commentary="", keywords=()):
        return UnitTemplate(
            label=label,
            inclusion=inclusion,
            order=order,
            commentary=commentary,
            keyword_suggestions=frozenset(keywords),
            versions=tuple(versions),
        )

    def node(label, inclusion, order, children, commentary="", keywords=()):
        return UnitTemplate(
            label=label,
            inclusion=inclusion,
            order=order,
            commentary=commentary,
            keyword_suggestions=frozenset(keywords),
            children=tuple(children),
        )

    C, O = Inclusion.COMPULSORY, Inclusion.OPTIONAL

    parts = (
        node(
            "Definitions and Interpretations", C, 1,
            [
                atomic(
                    "Singular and Plural", C, 1,
                    [version(1, "Words importing the singular only also include the plural and vice versa where the context requires.")],
                ),
            ],
        ),
        atomic(
            "Engineer and Engineer's Representative", C, 2,
            [
                version(
                    1,
                    "All references in the Contract to the Engineer are references to $Engineer, appointed by the Purchaser to administer the Contract. "
                    "The Engineer's Representative shall exercise only such duties as the Engineer may delegate in writing.",
                )
            ],
            commentary="Names the certifying engineer; a value is required for every drafted instance.",
        ),
        node(
            "Assignment and Sub-Contracting", O, 3,
            [
                atomic(
                    "Assignment", C, 1,
                    [version(1, "The Contractor shall not assign the Contract or any part thereof without the prior written consent of the Purchaser.")],
                ),
                atomic(
                    "Sub-Contracting", C, 2,
                    [version(1, "The Contractor shall not sub-contract the whole of the Works. The Contractor shall not sub-contract any part of the Works without the prior written consent of the Engineer, such consent not to be unreasonably withheld.")],
                ),
                atomic(
                    "Sub-Contractors Liability", O, 3,
                    [version(1, "The Contractor shall be responsible for the acts, defaults and neglects of any Sub-Contractor, his agents, servants or workmen as fully as if they were the acts, defaults or neglects of the Contractor.")],
                    commentary="Made compulsory by constraint whenever the sub-contracting part is used.",
                ),
            ],
        ),
        atomic(
            "Precedence of Documents", O, 4,
            [
                version(
                    1,
                    "Unless otherwise provided in the Contract the Conditions as amended by the Letter of Acceptance shall prevail over any other document forming part of the Contract and in the case of conflict between the General Conditions the Special Conditions shall prevail. Subject thereto the Specification shall prevail over any other document forming part of the Contract.",
                ),
                version(
                    2,
                    "The documents forming the Contract are to be taken as mutually explanatory of one another and in the case of ambiguities or discrepancies the same shall be explained and adjusted by the Engineer who shall thereupon issue to the Contractor appropriate instructions in writing.",
                    commentary="Preferred on previous plant projects: the parties wished ambiguities to be resolved by the Engineer rather than by a fixed order of precedence.",
                    author="drafting department",
                    created=_REVISION_DATE,
                ),
            ],
        ),
        atomic(
            "Basis of Tender and Contract Price", C, 5,
            [version(1, "The Contract Price shall be based on the conditions ruling at the date of tender and shall be adjusted only as provided in the Contract.")],
        ),
        atomic(
            "Changes in Costs", O, 6,
            [version(1, "If after the date of tender the cost to the Contractor of performing the Contract is increased or reduced by reason of any change in legislation, the amount of such increase or reduction shall be added to or deducted from the Contract Price.")],
        ),
        atomic(
            "Purchaser's General Obligations", C, 7,
            [version(1, "The Purchaser shall provide access to the Site and all consents, wayleaves and approvals necessary for the execution of the Works.")],
        ),
        node(
            "Contractor's Obligations", C, 8,
            [
                atomic(
                    "General Obligations", C, 1,
                    [version(1, "The Contractor shall, in accordance with the Contract, with due care and diligence, design, manufacture, deliver to Site, erect and test the Works and carry out all work incidental thereto.")],
                ),
                atomic(
                    "Contractor's Equipment", C, 2,
                    [
                        version(
                            1,
                            "The Contractor shall within $days days after the Letter of Acceptance provide to the Engineer a list of the Contractor's Equipment that the Contractor intends to use on the Site.",
                            params=[ParamSpec("days", ParamKind.INTEGER, required=True)],
                            commentary="The notice period is a parameter; thirty days in the model form.",
                        )
                    ],
                    keywords=("equipment",),
                ),
                atomic(
                    "Rate of Progress", C, 3,
                    [version(1, "The Engineer shall notify the Contractor if the Engineer decides that the rate of progress of the Works or of any Section is too slow to meet the Time for Completion and that this is not due to a circumstance for which the Contractor is entitled to an extension of time under Sub-Clause 33-1.")],
                ),
            ],
        ),
        atomic(
            "Suspension of Work, Delivery or Erection", C, 9,
            [version(1, "The Engineer may at any time instruct the Contractor to suspend the progress of the Works or of any part thereof, and the Contractor shall protect and secure the Works during such suspension.")],
        ),
        atomic(
            "Variations", O, 10,
            [version(1, "The Engineer may from time to time during the execution of the Contract direct the Contractor to alter, amend, omit or add to the Works, and the Contractor shall carry out such variations.")],
        ),
        atomic(
            "Defects Liability", O, 11,
            [version(1, "The Contractor shall be responsible for making good any defect in the Works which appears during the Defects Liability Period and which arises from defective materials, workmanship or design.")],
        ),
        atomic(
            "Tests on Completion", C, 12,
            [version(1, "The Contractor shall give notice to the Engineer when the Works are ready for the Tests on Completion, and the tests shall be carried out in the presence of the Engineer.")],
        ),
        atomic(
            "Taking Over", O, 13,
            [version(1, "When the Works have passed the Tests on Completion the Engineer shall issue a Taking-Over Certificate, and the Purchaser shall thereupon take over the Works.")],
        ),
        atomic(
            "Performance Tests", O, 14,
            [version(1, "The performance of the Works shall be demonstrated by the Performance Tests specified in the Contract, carried out after taking over.")],
        ),
        node(
            "Certificates and Payment", C, 15,
            [
                atomic(
                    "Certificates", C, 1,
                    [version(1, "The Contractor shall apply to the Engineer for certificates of payment at the times stated in the Contract, and the Engineer shall issue each certificate within fourteen days of the application.")],
                ),
                atomic(
                    "Payment Terms", C, 2,
                    [
                        version(1, "The Purchaser shall pay to the Contractor the amount certified within 30 days of the date of each certificate of the Engineer."),
                        version(
                            2,
                            "The Purchaser shall pay to the Contractor the amount certified within 60 days of the date of each certificate of the Engineer.",
                            commentary="Sixty-day terms agreed where the purchaser's internal payment cycle cannot meet the model form.",
                            author="drafting department",
                            created=_REVISION_DATE,
                        ),
                        version(
                            3,
                            "All payments shall be made in the currency stated in the Letter of Acceptance within 30 days of the date of each certificate, and amounts payable in a foreign currency shall be settled by irrevocable letter of credit opened in favour of the Contractor.",
                            commentary="Used with overseas contractors; pairs with the foreign currency payments section.",
                            author="drafting department",
                            created=_REVISION_DATE,
                        ),
                    ],
                    keywords=("payment", "certificates"),
                ),
                atomic(
                    "Foreign Currency Payments", O, 3,
                    [version(1, "Where the Contractor operates from outside the United Kingdom, payments due under the Contract shall be made in the foreign currency stated in the Letter of Acceptance at the rate of exchange ruling at the date of tender.")],
                    commentary="Required whenever the second party operates from outside the UK.",
                    keywords=("payment", "currency"),
                ),
            ],
        ),
        atomic(
            "Accidents and Damage", O, 16,
            [version(1, "The Contractor shall be responsible for and shall make good any loss or damage to the Works arising before taking over, save for the excepted risks.")],
        ),
        atomic(
            "Force Majeure", C, 17,
            [version(1, "Neither party shall be liable for any failure to perform its obligations under the Contract to the extent that such failure is caused by war, hostilities, riot, fire, flood or other circumstances beyond its reasonable control.")],
            keywords=("force majeure",),
        ),
        atomic(
            "Insurance", O, 18,
            [version(1, "The Contractor shall insure the Works to their full replacement value against all loss or damage from whatever cause arising until taking over, and shall produce the policy to the Purchaser on request.")],
            keywords=("insurance",),
        ),
        atomic(
            "Disputes and Arbitration", O, 19,
            [version(1, "Any dispute arising out of or in connection with the Contract shall, failing agreement, be referred to the arbitration of a person agreed between the parties or, failing such agreement, appointed by the President of the Institution of Electrical Engineers.")],
        ),
        node(
            "Time for Completion", C, 20,
            [
                atomic(
                    "Extension of Time for Completion", C, 1,
                    [
                        version(1, "If by reason of any variation ordered by the Engineer, or of any act or omission on the part of the Purchaser, the Contractor shall have been delayed in the completion of the Works, the Time for Completion shall be extended by a period equal to the delay so caused."),
                        version(
                            2,
                            "The Contractor may request an extension of the Time for Completion where completion is delayed by any cause beyond the reasonable control of the Contractor, and the Engineer shall grant such extension as is fair and reasonable in the circumstances.",
                            commentary="Broader ground for extension, preferred by contractors; granted where the purchaser accepted the wider risk allocation.",
                            author="drafting department",
                            created=_REVISION_DATE,
                        ),
                    ],
                    keywords=("delay", "extension"),
                ),
                atomic(
                    "Delays by Sub-Contractors", C, 2,
                    [version(1, "Any delay on the part of a Sub-Contractor which prevents the Contractor from completing the Works within the Time for Completion shall entitle the Contractor to an extension only where the delay arises from a cause for which the Contractor would itself be entitled to an extension.")],
                ),
            ],
        ),
    )

    generic = GenericDocument(
        doc_type=MF2,
        category="research",
        params=(ParamSpec("Engineer", ParamKind.STRING, required=True),),
        parts=parts,
        constraints=(
            con.Forces(antecedent=ASSIGNMENT_PART, consequent=SUBCONTRACTORS_LIABILITY),
            con.Forces(
                antecedent=parse_cond('$Party2.Address != "UK"'),
                consequent=FOREIGN_CURRENCY,
            ),
            con.Refers(source=RATE_OF_PROGRESS, target=EXTENSION),
            con.DataConstraint(
                expr=parse_cond(
                    "not ($Party1.Name = $Party2.Name and $Party1.Address = $Party2.Address)"
                ),
                message="The contracting parties must not be identical.",
            ),
        ),
    )
    return generic, fragments


# ---------------------------------------------------------------------------
# Demo instances
# ---------------------------------------------------------------------------


def _final_instance(
    g: GenericDocument,
    instance_id: str,
    display_name: str,
    parties: tuple[Party, Party],
    date: dt.date,
    engineer: str,
    days: int,
    payment_version: int,
    include: tuple[UnitPath, ...] = (),
    choose: dict = None,
) -> DocumentInstance:
    inst = DocumentInstance(doc_type=g.doc_type, id=instance_id, display_name=display_name)
    inst.selections = default_selections(g)
    for path, unit in walk_units(g):
        if unit.keyword_suggestions:
            inst.keywords[path] = set(unit.keyword_suggestions)
    for path in include:
        inst.included_optional.add(path)
        inst.selections.update(
            {p: n for p, n in default_selections(g, within=path).items() if p not in inst.selections}
        )
    inst.selections[PAYMENT_TERMS] = payment_version
    for path, number in (choose or {}).items():
        inst.selections[path] = number
    inst.parties = parties
    inst.date = date
    inst.bindings = [
        ParamBinding("Engineer", engineer),
        ParamBinding("days", days, scope=EQUIPMENT),
    ]
    inst.status = Status.FINAL
    return inst


def build_demo_instances(g: GenericDocument) -> list[DocumentInstance]:
    r1 = _final_instance(
        g,
        "R1",
        "Paris Plant 1992",
        (
            Party("Northern Gas Works Ltd", "Corporation Street, Leeds", (("cooperation", "good"),)),
            Party("Compagnie Generale de Gaz", "14 Rue Laplace, Paris, France"),
        ),
        dt.date(1992, 3, 14),
        engineer="Frank",
        days=30,
        payment_version=3,
        include=(FOREIGN_CURRENCY, PRECEDENCE),
        choose={PRECEDENCE: 2},
    )
    r1.keywords[PAYMENT_TERMS] |= {"letter of credit"}
    r1.tags = {
        EQUIPMENT: {Tag(TagKind.DUTY, 2, "provide equipment list")},
        PAYMENT_TERMS: {Tag(TagKind.DUTY, 1, "pay certified amounts")},
    }
    r1.notes = "First of the French plant projects; payment by letter of credit."

    r2 = _final_instance(
        g,
        "R2",
        "Southampton Plant 1993",
        (
            Party("Northern Gas Works Ltd", "Corporation Street, Leeds"),
            Party("South Coast Energy Ltd", "UK"),
        ),
        dt.date(1993, 6, 8),
        engineer="Margaret Hill",
        days=45,
        payment_version=1,
    )
    r2.tags = {UnitPath.of("Tests on Completion"): {Tag(TagKind.RIGHT, 1, "attend tests")}}

    r3 = _final_instance(
        g,
        "R3",
        "Oxford Plant 1994",
        (
            Party("Northern Gas Works Ltd", "Corporation Street, Leeds"),
            Party("Banbury Instruments SA", "Quai de la Gare, Lyon, France"),
        ),
        dt.date(1994, 12, 15),
        engineer="J Okafor",
        days=30,
        payment_version=2,
        include=(FOREIGN_CURRENCY,),
    )
    r3.tags = {
        UnitPath.of("Contractor's Obligations", "General Obligations"): {
            Tag(TagKind.DUTY, 2, "deliver and erect the works")
        }
    }
    return [r1, r2, r3]


def install_demo_store(root) -> "Store":
    """Create (or populate) a store at ``root`` with the demo corpus."""
    from .store import Store

    store = Store(root, create=True)
    g, fragments = build_mf2()
    store.put_generic(g, fragments)
    for inst in build_demo_instances(g):
        allocated = store.allocate_instance_id("R")
        if allocated != inst.id:
            raise RuntimeError(
                f"demo store must start empty: expected id {inst.id}, allocated {allocated}"
            )
        store.put_instance(inst)
    return store
