"""Deterministic synthetic corpus and QA-set generator.

The real study-program corpus is not redistributable, so demos, fixtures,
and offline benchmark runs build a look-alike: bilingual program documents
(an English and a German record per program, sharing the display name) with
topic sections whose bodies are long enough to exercise parent and child
splitting. Everything is a pure function of the seed.
"""

from __future__ import annotations

import random

from .corpus import Corpus, QAItem, StudyProgramDoc, TopicSection

SUBJECTS = [
    "Mathematics", "Informatics", "Data Engineering", "Mathematics in Data Science",
    "Aerospace Engineering", "Mechanical Engineering", "Electrical Engineering",
    "Physics", "Chemistry", "Biochemistry", "Management and Technology",
    "Civil Engineering", "Environmental Engineering", "Robotics", "Computational Science",
    "Automotive Engineering", "Bioinformatics", "Quantum Technology",
    "Materials Science", "Geodesy", "Architecture", "Chemical Engineering",
    "Neuroscience", "Games Engineering", "Energy Systems", "Medical Informatics",
    "Applied Statistics", "Transportation Systems", "Food Technology",
    "Sustainable Construction", "Industrial Design", "Mathematics in Finance",
    "Plant Sciences", "Sports Science", "Political Science", "Aerospace",
]

LEVELS = ["Bachelor of Science", "Master of Science"]

TOPICS = [
    ("costs", {"en": "Costs", "de": "Kosten"}),
    ("application", {"en": "Application and Admission", "de": "Bewerbung und Zulassung"}),
    ("language", {"en": "Required Language Proficiency", "de": "Erforderliche Sprachkenntnisse"}),
    ("duration", {"en": "Type and Duration of Study", "de": "Art und Dauer des Studiums"}),
    ("curriculum", {"en": "Curriculum and Coursework", "de": "Studieninhalte"}),
    ("career", {"en": "Career Prospects", "de": "Berufsaussichten"}),
]

_SENTENCES = {
    "en": {
        "costs": [
            "Students enrolled in {name} pay a semester fee of {fee} euros which covers the student union and basic transport.",
            "International applicants from outside the European Union pay tuition fees of {tuition} euros per semester for {name}.",
            "There are no additional tuition fees for citizens of the European Economic Area studying {name}.",
            "A one-time enrollment charge of {small} euros applies in the first semester.",
            "Scholarships covering the semester fee are available for outstanding students of {name}.",
        ],
        "application": [
            "Applications for {name} are submitted through the university application portal before the deadline on {deadline}.",
            "The admission to {name} includes a two-stage aptitude assessment of grades and a subject interview.",
            "Applicants with a degree from outside the EU must provide a preliminary documentation review for {name}.",
            "A letter of motivation of at most two pages is required when applying to {name}.",
            "Shortlisted candidates for {name} are invited to a thirty minute interview with two examiners.",
        ],
        "language": [
            "Proof of English proficiency at level {cefr} is mandatory for {name}, for example an accepted standardized test.",
            "German language skills are not required for the English track of {name} but level A2 is recommended for daily life.",
            "Accepted certificates for {name} include internationally recognized tests taken within the last two years.",
            "Native speakers and applicants with an English-taught degree are exempt from the language requirement of {name}.",
        ],
        "duration": [
            "{name} is a full-time program with a standard duration of {semesters} semesters.",
            "Graduates of {name} earn {ects} ECTS credits in total including the final thesis.",
            "{name} starts in both the winter and the summer semester.",
            "Part-time enrollment in {name} is possible and extends the standard duration accordingly.",
        ],
        "curriculum": [
            "The first year of {name} builds mandatory foundations before students choose an individual specialization.",
            "Electives in {name} span {electives} focus areas and a cross-disciplinary project week.",
            "A supervised industry internship of {weeks} weeks is integrated into the curriculum of {name}.",
            "The final semester of {name} is reserved for the thesis which may be written with an external partner.",
        ],
        "career": [
            "Alumni of {name} work in research institutes, engineering firms, and public administration.",
            "The placement rate of {name} graduates within six months is above {rate} percent.",
            "Typical entry positions after {name} include analyst, development engineer, and consultant roles.",
            "A consecutive doctoral track is open to {name} graduates with honors.",
        ],
    },
    "de": {
        "costs": [
            "Studierende im Studiengang {name} zahlen einen Semesterbeitrag von {fee} Euro für Studentenwerk und Verkehr.",
            "Internationale Bewerberinnen und Bewerber von außerhalb der EU zahlen für {name} Studiengebühren von {tuition} Euro pro Semester.",
            "Für Staatsangehörige des Europäischen Wirtschaftsraums fallen im Studiengang {name} keine zusätzlichen Gebühren an.",
            "Im ersten Semester wird eine einmalige Einschreibegebühr von {small} Euro erhoben.",
            "Für herausragende Studierende von {name} gibt es Stipendien, die den Semesterbeitrag abdecken.",
        ],
        "application": [
            "Bewerbungen für {name} erfolgen über das Bewerbungsportal der Universität bis zur Frist am {deadline}.",
            "Die Zulassung zu {name} umfasst ein zweistufiges Eignungsverfahren aus Notenprüfung und Fachgespräch.",
            "Bewerberinnen und Bewerber mit Abschluss außerhalb der EU benötigen für {name} eine Vorprüfungsdokumentation.",
            "Für die Bewerbung zu {name} ist ein Motivationsschreiben von höchstens zwei Seiten einzureichen.",
            "Ausgewählte Bewerberinnen und Bewerber für {name} werden zu einem dreißigminütigen Gespräch eingeladen.",
        ],
        "language": [
            "Für {name} sind Deutschkenntnisse auf Niveau {cefr} nachzuweisen, etwa durch eine anerkannte Prüfung.",
            "Englischkenntnisse auf Niveau B2 werden für {name} dringend empfohlen.",
            "Anerkannte Zertifikate für {name} dürfen höchstens zwei Jahre alt sein.",
            "Muttersprachlerinnen und Muttersprachler sind von der Sprachanforderung für {name} befreit.",
        ],
        "duration": [
            "{name} ist ein Vollzeitstudium mit einer Regelstudienzeit von {semesters} Semestern.",
            "Absolventinnen und Absolventen von {name} erwerben insgesamt {ects} ECTS-Punkte einschließlich der Abschlussarbeit.",
            "{name} beginnt sowohl zum Winter- als auch zum Sommersemester.",
            "Ein Teilzeitstudium ist in {name} möglich und verlängert die Regelstudienzeit entsprechend.",
        ],
        "curriculum": [
            "Das erste Studienjahr von {name} vermittelt Pflichtgrundlagen, bevor eine individuelle Vertiefung gewählt wird.",
            "Die Wahlmodule in {name} umfassen {electives} Schwerpunktbereiche und eine fachübergreifende Projektwoche.",
            "Ein betreutes Industriepraktikum von {weeks} Wochen ist in das Curriculum von {name} integriert.",
            "Das letzte Semester von {name} ist der Abschlussarbeit vorbehalten, die auch extern geschrieben werden kann.",
        ],
        "career": [
            "Absolventinnen und Absolventen von {name} arbeiten in Forschungsinstituten, Ingenieurbüros und der Verwaltung.",
            "Die Vermittlungsquote von {name} liegt innerhalb von sechs Monaten über {rate} Prozent.",
            "Typische Einstiegspositionen nach {name} sind Analyse-, Entwicklungs- und Beratungsrollen.",
            "Ein anschließendes Promotionsprogramm steht Absolventinnen und Absolventen von {name} mit Auszeichnung offen.",
        ],
    },
}

_QUESTION_TEMPLATES = {
    "en": {
        "costs": "What are the tuition fees for {name}?",
        "application": "How do I apply for {name}?",
        "language": "Which language certificates do I need for {name}?",
        "duration": "How many semesters does {name} take?",
        "curriculum": "What courses are part of {name}?",
        "career": "What are the career prospects after {name}?",
    },
    "de": {
        "costs": "Welche Studiengebühren fallen für {name} an?",
        "application": "Wie bewerbe ich mich für {name}?",
        "language": "Welche Sprachnachweise brauche ich für {name}?",
        "duration": "Wie viele Semester dauert {name}?",
        "curriculum": "Welche Kurse gehören zu {name}?",
        "career": "Welche Berufsaussichten habe ich nach {name}?",
    },
}


def _slug(text: str) -> str:
    return "".join(ch if ch.isalnum() else "-" for ch in text.lower()).strip("-").replace("--", "-")


def _program_names(count: int) -> list[str]:
    names = []
    for level in LEVELS:
        for subject in SUBJECTS:
            names.append(f"{level} in {subject}")
    if count > len(names):
        raise ValueError(f"can generate at most {len(names)} program names, asked for {count}")
    return names[:count]


def _section_body(rng: random.Random, language: str, topic_id: str, name: str, target_chars: int) -> str:
    pool = _SENTENCES[language][topic_id]
    values = {
        "name": name,
        "fee": rng.choice([72, 85, 128, 144]),
        "tuition": rng.choice([2000, 3000, 4000, 6000]),
        "small": rng.choice([25, 40, 60]),
        "deadline": rng.choice(["May 31", "July 15", "January 15"] if language == "en" else ["31. Mai", "15. Juli", "15. Januar"]),
        "cefr": rng.choice(["B2", "C1", "C2"]),
        "semesters": rng.choice([4, 6, 7]),
        "ects": rng.choice([120, 180, 210]),
        "electives": rng.choice([3, 5, 8]),
        "weeks": rng.choice([8, 12, 20]),
        "rate": rng.choice([80, 90, 95]),
    }
    sentences = []
    length = 0
    i = 0
    while length < target_chars:
        sentence = pool[i % len(pool)].format(**values)
        sentences.append(sentence)
        length += len(sentence) + 1
        i += 1
    return " ".join(sentences)


def make_corpus(n_programs: int = 72, languages: tuple[str, ...] = ("en", "de"), seed: int = 7) -> Corpus:
    """Build ``n_programs`` bilingual programs (one doc per language each)."""
    rng = random.Random(seed)
    docs = []
    for name in _program_names(n_programs):
        base = _slug(name)
        n_topics = rng.randint(3, len(TOPICS))
        chosen = TOPICS[:n_topics]
        targets = [rng.randint(250, 3600) for _ in chosen]
        for language in languages:
            sections = []
            for (topic_id, titles), target in zip(chosen, targets):
                body = _section_body(rng, language, topic_id, name, target)
                sections.append(TopicSection(topic_id=topic_id, title=titles[language], body=body))
            docs.append(
                StudyProgramDoc(
                    program_id=f"{base}-{language}",
                    name=name,
                    language=language,
                    sections=tuple(sections),
                )
            )
    docs.sort(key=lambda d: d.program_id)
    return Corpus(tuple(docs))


def make_qa(corpus: Corpus, n_items: int = 20, seed: int = 11) -> list[QAItem]:
    """Sample gold (program, topic) pairs and phrase one question per pair."""
    rng = random.Random(seed)
    items = []
    docs = list(corpus)
    for i in range(n_items):
        doc = rng.choice(docs)
        sec = rng.choice(doc.sections)
        question = _QUESTION_TEMPLATES[doc.language][sec.topic_id].format(name=doc.name)
        first_sentence = sec.body.split(". ")[0].rstrip(".") + "."
        items.append(
            QAItem(
                qa_id=f"qa-{i:04d}",
                question=question,
                reference_answer=first_sentence,
                gold_program_id=doc.program_id,
                gold_topic_id=sec.topic_id,
                language=doc.language,
            )
        )
    return items
