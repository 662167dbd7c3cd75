#include "synthner/stemmer.hpp"

#include <algorithm>
#include <vector>

#include "synthner/text.hpp"

namespace synthner {

namespace {

using Word = std::u32string;

bool ends_with(const Word& w, const Word& suffix) {
  return w.size() >= suffix.size() && w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// Longest suffix of `w` from `table` that starts at or after `region`.
const Word* longest_in(const Word& w, std::size_t region, const std::vector<Word>& table) {
  const Word* best = nullptr;
  for (const auto& s : table) {
    if (s.size() > w.size() || !ends_with(w, s) || w.size() - s.size() < region) continue;
    if (!best || s.size() > best->size()) best = &s;
  }
  return best;
}

std::size_t after_vowel_consonant(const Word& w, std::size_t from, bool (*vowel)(char32_t)) {
  for (std::size_t i = from + 1; i < w.size(); ++i) {
    if (!vowel(w[i]) && vowel(w[i - 1])) return i + 1;
  }
  return w.size();
}

// --- Swedish -------------------------------------------------------------------------------

bool sv_vowel(char32_t c) {
  return c == U'a' || c == U'e' || c == U'i' || c == U'o' || c == U'u' || c == U'y' || c == U'ä' ||
         c == U'å' || c == U'ö';
}

const std::vector<Word> kSvStep1 = {
    U"a",     U"arna",  U"erna",  U"heterna", U"orna",  U"ad",     U"e",     U"ade",    U"ande",
    U"arne",  U"are",   U"aste",  U"en",      U"anden", U"aren",   U"heten", U"ern",    U"ar",
    U"er",    U"heter", U"or",    U"as",      U"arnas", U"ernas",  U"ornas", U"es",     U"ades",
    U"andes", U"ens",   U"arens", U"hetens",  U"erns",  U"at",     U"andet", U"het",    U"ast"};
const std::vector<Word> kSvStep2 = {U"dd", U"gd", U"nn", U"dt", U"gt", U"kt", U"tt"};
const std::vector<Word> kSvStep3 = {U"lig", U"ig", U"els"};
const Word kSvSEnding = U"bcdfghjklmnoprtvy";

Word swedish_pass(Word w) {
  std::size_t r1 = after_vowel_consonant(w, 0, sv_vowel);
  r1 = std::max<std::size_t>(r1, 3);
  if (r1 > w.size()) r1 = w.size();

  // Step 1: main suffixes, or a lone s after a valid s-ending.
  const Word* s1 = longest_in(w, r1, kSvStep1);
  const bool lone_s = w.size() >= 2 && w.back() == U's' && w.size() - 1 >= r1 &&
                      kSvSEnding.find(w[w.size() - 2]) != Word::npos;
  if (s1) {
    w.erase(w.size() - s1->size());
  } else if (lone_s) {
    w.pop_back();
  }

  // Step 2: undouble consonant endings.
  if (longest_in(w, r1, kSvStep2)) w.pop_back();

  // Step 3.
  if (w.size() >= r1) {
    if (ends_with(w, U"fullt") && w.size() - 5 >= r1) {
      w.pop_back();
    } else if (ends_with(w, U"löst") && w.size() - 4 >= r1) {
      w.pop_back();
    } else if (const Word* s = longest_in(w, r1, kSvStep3)) {
      w.erase(w.size() - s->size());
    }
  }
  return w;
}

// --- Spanish -------------------------------------------------------------------------------

bool es_vowel(char32_t c) {
  return c == U'a' || c == U'e' || c == U'i' || c == U'o' || c == U'u' || c == U'á' || c == U'é' ||
         c == U'í' || c == U'ó' || c == U'ú' || c == U'ü';
}

struct Regions {
  std::size_t rv, r1, r2;
};

Regions es_regions(const Word& w) {
  Regions r{w.size(), w.size(), w.size()};
  if (w.size() >= 2) {
    if (!es_vowel(w[1])) {
      for (std::size_t i = 2; i < w.size(); ++i) {
        if (es_vowel(w[i])) {
          r.rv = i + 1;
          break;
        }
      }
    } else if (es_vowel(w[0]) && es_vowel(w[1])) {
      for (std::size_t i = 2; i < w.size(); ++i) {
        if (!es_vowel(w[i])) {
          r.rv = i + 1;
          break;
        }
      }
    } else {
      r.rv = std::min<std::size_t>(3, w.size());
    }
  }
  r.r1 = after_vowel_consonant(w, 0, es_vowel);
  r.r2 = r.r1 < w.size() ? after_vowel_consonant(w, r.r1, es_vowel) : w.size();
  return r;
}

const std::vector<Word> kEsDeleteR2 = {
    U"anza",   U"anzas",   U"ico",     U"ica",      U"icos",    U"icas",    U"ismo",   U"ismos",
    U"able",   U"ables",   U"ible",    U"ibles",    U"ista",    U"istas",   U"oso",    U"osa",
    U"osos",   U"osas",    U"amiento", U"amientos", U"imiento", U"imientos", U"adora", U"ador",
    U"ación",  U"adoras",  U"adores",  U"aciones",  U"ante",    U"antes",   U"ancia",  U"ancias",
    U"mente",  U"idad",    U"idades",  U"iva",      U"ivo",     U"ivas",    U"ivos"};

struct Replacement {
  Word suffix;
  Word with;
  bool r1_only;
};

const std::vector<Replacement> kEsReplace = {{U"logía", U"log", false},  {U"logías", U"log", false},
                                             {U"ución", U"u", false},    {U"uciones", U"u", false},
                                             {U"encia", U"ente", false}, {U"encias", U"ente", false},
                                             {U"amente", U"", true}};

const std::vector<Word> kEsVerb = {
    U"arían", U"arías",  U"arán",   U"arás",    U"aríais", U"aría",   U"aréis",  U"aríamos", U"aremos",
    U"ará",   U"aré",    U"erían",  U"erías",   U"erán",   U"erás",   U"eríais", U"ería",    U"eréis",
    U"eríamos", U"eremos", U"erá",  U"eré",     U"irían",  U"irías",  U"irán",   U"irás",    U"iríais",
    U"iría",  U"iréis",  U"iríamos", U"iremos", U"irá",    U"iré",    U"aba",    U"ada",     U"ida",
    U"ía",    U"ara",    U"iera",   U"ad",      U"ed",     U"id",     U"ase",    U"iese",    U"aste",
    U"iste",  U"an",     U"aban",   U"ían",     U"aran",   U"ieran",  U"asen",   U"iesen",   U"aron",
    U"ieron", U"ado",    U"ido",    U"ando",    U"iendo",  U"ió",     U"ar",     U"er",      U"ir",
    U"as",    U"abas",   U"adas",   U"idas",    U"ías",    U"aras",   U"ieras",  U"ases",    U"ieses",
    U"ís",    U"áis",    U"abais",  U"íais",    U"arais",  U"ierais", U"aseis",  U"ieseis",  U"asteis",
    U"isteis", U"ados",  U"idos",   U"amos",    U"ábamos", U"íamos",  U"imos",   U"áramos",  U"iéramos",
    U"iésemos", U"ásemos", U"en",   U"es",      U"éis",    U"emos"};

const std::vector<Word> kEsResidual = {U"os", U"a", U"o", U"á", U"í", U"ó"};

char32_t strip_acute(char32_t c) {
  switch (c) {
    case U'á':
      return U'a';
    case U'é':
      return U'e';
    case U'í':
      return U'i';
    case U'ó':
      return U'o';
    case U'ú':
      return U'u';
    default:
      return c;
  }
}

Word spanish_pass(Word w) {
  Regions r = es_regions(w);
  bool changed = false;

  // Step 1: standard suffixes; the longest match across both tables wins.
  const Word* del = longest_in(w, r.r2, kEsDeleteR2);
  const Replacement* rep = nullptr;
  for (const auto& x : kEsReplace) {
    const std::size_t region = x.r1_only ? r.r1 : r.r2;
    if (ends_with(w, x.suffix) && w.size() - x.suffix.size() >= region &&
        (!rep || x.suffix.size() > rep->suffix.size())) {
      rep = &x;
    }
  }
  if (rep && (!del || rep->suffix.size() > del->size())) {
    w.erase(w.size() - rep->suffix.size());
    w += rep->with;
    changed = true;
  } else if (del) {
    w.erase(w.size() - del->size());
    changed = true;
  }

  // Step 2: verb suffixes, only when step 1 removed nothing.
  if (!changed) {
    r = es_regions(w);
    if (const Word* v = longest_in(w, r.rv, kEsVerb)) {
      w.erase(w.size() - v->size());
      const bool plain_e = *v == U"en" || *v == U"es" || *v == U"éis" || *v == U"emos";
      if (plain_e && ends_with(w, U"gu")) w.pop_back();
    }
  }

  // Step 3: residual vowels.
  r = es_regions(w);
  if (const Word* s = longest_in(w, r.rv, kEsResidual)) {
    w.erase(w.size() - s->size());
  } else if (!w.empty() && (w.back() == U'e' || w.back() == U'é') && w.size() - 1 >= r.rv) {
    w.pop_back();
    if (ends_with(w, U"gu") && w.size() - 1 >= r.rv) w.pop_back();
  }

  for (auto& c : w) c = strip_acute(c);
  return w;
}

}  // namespace

std::string stem(std::string_view token, Language language) {
  Word w = text::decode_utf8(text::to_lower(token));
  if (language == Language::other) return text::encode_utf8(w);
  auto pass = language == Language::sv ? swedish_pass : spanish_pass;
  // Each pass only shortens or keeps the word, so this terminates.
  while (true) {
    Word next = pass(w);
    if (next == w) break;
    w = std::move(next);
  }
  return text::encode_utf8(w);
}

}  // namespace synthner
