#include "synthner/template_corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string_view>

#include "synthner/error.hpp"
#include "synthner/rng.hpp"
#include "synthner/text.hpp"

namespace synthner {

namespace {

using Words = std::vector<std::string>;

std::string pad2(std::uint64_t v) { return (v < 10 ? "0" : "") + std::to_string(v); }

std::string digits(Rng& rng, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(static_cast<char>('0' + rng.below(10)));
  return s;
}

/// Deduplicated, order-preserving list of `n` generated strings.
template <typename Gen>
Words generate(std::size_t n, std::uint64_t seed, Gen gen) {
  Rng rng(seed);
  Words out;
  std::size_t guard = 0;
  while (out.size() < n && guard++ < n * 50) {
    std::string s = gen(rng);
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(std::move(s));
  }
  return out;
}

Words cross(const Words& a, const Words& b, std::size_t n, std::uint64_t seed) {
  return generate(n, seed, [&](Rng& rng) {
    return a[rng.below(a.size())] + " " + b[rng.below(b.size())];
  });
}

// --- Swedish inventory -------------------------------------------------------------------

const Words kSvFirst = {
    "Anna",   "Erik",   "Maria",   "Lars",    "Karin",  "Per",     "Eva",     "Anders",  "Kristina",
    "Johan",  "Lena",   "Mikael",  "Sara",    "Karl",   "Emma",    "Nils",    "Ingrid",  "Olof",
    "Elin",   "Gustav", "Sofia",   "Henrik",  "Maja",   "Oskar",   "Linnea",  "Magnus",  "Ida",
    "Fredrik", "Astrid", "Jonas",  "Helena",  "Björn",  "Agneta",  "Stefan",  "Ulla",    "Mats",
    "Birgitta", "Peter", "Camilla", "Tomas",  "Frida",  "Axel",    "Hanna",   "Viktor",  "Malin",
    "Daniel", "Klara",  "Sven",    "Ebba",    "Håkan",  "Louise",  "Göran",   "Jenny",   "Rolf",
    "Moa",    "Leif",   "Tove",    "Bengt",   "Alva",   "Åsa"};

const Words kSvLast = {
    "Andersson",  "Johansson", "Karlsson",  "Nilsson",    "Eriksson",  "Larsson",   "Olsson",
    "Persson",    "Svensson",  "Gustafsson", "Pettersson", "Jonsson",  "Jansson",   "Hansson",
    "Bengtsson",  "Jönsson",   "Lindberg",  "Jakobsson",  "Magnusson", "Lindström", "Olofsson",
    "Lindqvist",  "Lindgren",  "Berg",      "Axelsson",   "Bergström", "Lundberg",  "Lind",
    "Lundgren",   "Lundqvist", "Mattsson",  "Berglund",   "Fredriksson", "Sandberg", "Henriksson",
    "Forsberg",   "Sjöberg",   "Wallin",    "Engström",   "Eklund",    "Danielsson", "Lundin",
    "Håkansson",  "Björk",     "Bergman",   "Gunnarsson", "Holm",      "Wikström",  "Samuelsson",
    "Isaksson",   "Fransson",  "Bergqvist", "Nyström",    "Holmberg",  "Arvidsson", "Löfgren",
    "Söderberg",  "Nyberg",    "Blomqvist", "Claesson"};

const Words kSvTowns = {
    "Stockholm", "Göteborg",   "Malmö",     "Uppsala",   "Västerås",  "Örebro",     "Linköping",
    "Helsingborg", "Jönköping", "Norrköping", "Lund",    "Umeå",      "Gävle",      "Borås",
    "Södertälje", "Eskilstuna", "Halmstad", "Växjö",     "Karlstad",  "Sundsvall",  "Östersund",
    "Trollhättan", "Luleå",    "Lidingö",   "Borlänge",  "Tumba",     "Kristianstad", "Kalmar",
    "Falun",     "Skövde",     "Karlskrona", "Uddevalla", "Skellefteå", "Varberg",  "Nyköping",
    "Solna",     "Huddinge",   "Nacka",     "Täby",      "Sollentuna", "Motala",    "Visby",
    "Kiruna",    "Ystad",      "Mora",      "Vimmerby"};

const Words kSvStreets = {"Storgatan", "Kungsgatan", "Drottninggatan", "Skolgatan", "Kyrkogatan",
                          "Järnvägsgatan", "Parkvägen", "Björkvägen", "Ringvägen", "Sveavägen",
                          "Hamngatan", "Torggatan", "Villavägen", "Allégatan"};

const Words kSvMonths = {"januari", "februari", "mars",      "april",   "maj",      "juni",
                         "juli",    "augusti",  "september", "oktober", "november", "december"};

const Words kSvUnits = {"Akuten",       "Kardiologen",  "Ortopeden",   "IVA",         "Geriatriken",
                        "Infektionskliniken", "Medicinakuten", "Barnakuten", "Onkologen",
                        "Neurologen",   "Psykiatrin",   "Kirurgen",    "Urologen",    "Hudkliniken",
                        "Karolinska",   "Sahlgrenska",  "Danderyds sjukhus", "Södersjukhuset",
                        "Akademiska sjukhuset", "Capio S:t Görans sjukhus"};

const Words kSvOrgs = {"Volvo",     "Skolverket", "ICA",       "Försäkringskassan", "Arbetsförmedlingen",
                       "Ericsson",  "Scania",     "SJ",        "Posten",            "Systembolaget",
                       "Vattenfall", "Skanska",   "Coop",      "Polisen",           "Kommunen",
                       "Hemtjänsten", "SAAB",     "Spotify",   "Telia",             "Securitas",
                       "Apoteket",  "Migrationsverket", "Skatteverket", "Länsstyrelsen", "IKEA"};

const Words kSvTemplates = {
    "Patienten <First_Name> <Last_Name> , <Age> år , inkom till <Health_Care_Unit> den <Full_Date> .",
    "Pat <First_Name> <Last_Name> söker akut för bröstsmärta .",
    "<First_Name> <Last_Name> är en <Age> -årig man från <Location> .",
    "<First_Name> är en <Age> -årig kvinna som bor i <Location> .",
    "Remiss från <Health_Care_Unit> inkom <Full_Date> .",
    "Anhörig <First_Name> nås på telefon <Phone_Number> .",
    "Kontakt med dottern <First_Name> <Last_Name> på <Phone_Number> .",
    "Pat bor i <Location> och arbetar på <Organization> .",
    "Återbesök planeras <Date_Part> på <Health_Care_Unit> .",
    "Senast sedd på <Health_Care_Unit> i <Date_Part> .",
    "Överflyttas till <Health_Care_Unit> i <Location> .",
    "Pat är sjukskriven från <Organization> sedan <Full_Date> .",
    "Ring <Phone_Number> vid frågor .",
    "Uppgifter från <*> bekräftas .",
    "Samtal med <*> angående vårdplanen .",
    "Enligt <*> har pat haft feber .",
    "Ssk <First_Name> ringde <Date_Part> .",
    "Dr <Last_Name> bedömer att pat kan gå hem .",
    "Pat , född <Full_Date> , är <Age> år .",
    "Make <First_Name> <Last_Name> informerad <Date_Part> .",
    "Pat flyttade från <Location> till <Location> <Date_Part> .",
    "Tidigare anställd vid <Organization> i <Location> ."};

const Words kSvPhrases = {
    "Pat vårdas för feber och hosta .",
    "Inga kända allergier .",
    "Blodtryck 130/80 , puls 72 .",
    "Pat mår bättre idag .",
    "Fortsatt behandling med antibiotika .",
    "Provtagning visar förhöjt CRP .",
    "Pat har sovit gott under natten .",
    "Smärtlindring med paracetamol 1 g vid behov .",
    "Ingen feber senaste dygnet .",
    "Lungor auskulteras med vesikulära andningsljud .",
    "Buken mjuk och oöm .",
    "EKG visar sinusrytm .",
    "Pat mobiliseras med stöd .",
    "Nutrition fungerar bra .",
    "Planeras för hemgång inom några dagar .",
    "Pat är vaken och orienterad .",
    "Sår läker fint utan tecken på infektion .",
    "Urinodling tagen .",
    "Pat klagar över yrsel .",
    "Diabetes typ 2 sedan tidigare .",
    "Insulin 10 E före frukost .",
    "Saturation 96 % på rumsluft .",
    "Ordinerat 500 mg tre gånger dagligen .",
    "Pat önskar samtal med läkare .",
    "Röntgen thorax utan anmärkning .",
    "Smärtskattning 4 av 10 .",
    "Vätskebalans följs .",
    "Pat äter och dricker .",
    "Kvarstående hosta .",
    "Besök av anhöriga under eftermiddagen ."};

// --- Spanish inventory -------------------------------------------------------------------

const Words kEsFirst = {"María",  "José",    "Antonio", "Carmen",  "Manuel",  "Josefa",   "Francisco",
                        "Isabel", "David",   "Ana",     "Juan",    "Laura",   "Javier",   "Cristina",
                        "Daniel", "Marta",   "Carlos",  "Lucía",   "Miguel",  "Pilar",    "Rafael",
                        "Elena",  "Pedro",   "Raquel",  "Pablo",   "Rosa",    "Ángel",    "Sara",
                        "Sergio", "Paula",   "Fernando", "Teresa", "Jorge",   "Beatriz",  "Luis",
                        "Nuria",  "Alberto", "Silvia",  "Álvaro",  "Julia"};

const Words kEsLast = {"García",    "Rodríguez", "González", "Fernández", "López",    "Martínez",
                       "Sánchez",   "Pérez",     "Gómez",    "Martín",    "Jiménez",  "Ruiz",
                       "Hernández", "Díaz",      "Moreno",   "Muñoz",     "Álvarez",  "Romero",
                       "Alonso",    "Gutiérrez", "Navarro",  "Torres",    "Domínguez", "Vázquez",
                       "Ramos",     "Gil",       "Ramírez",  "Serrano",   "Blanco",   "Molina",
                       "Morales",   "Suárez",    "Ortega",   "Delgado",   "Castro",   "Ortiz",
                       "Rubio",     "Marín",     "Sanz",     "Iglesias"};

const Words kEsCities = {"Madrid",   "Barcelona", "Sevilla", "Valencia",  "Bilbao",   "Zaragoza",
                         "Málaga",   "Toledo",    "Murcia",  "Córdoba",   "Granada",  "Oviedo",
                         "Alicante", "Valladolid", "Vigo",   "Gijón",     "Salamanca", "Cádiz",
                         "Burgos",   "León",      "Cáceres", "Badajoz",   "Pamplona", "Logroño",
                         "Santander", "Almería",  "Huelva",  "Jaén",      "Lugo",     "Soria"};

const Words kEsCountries = {"España",  "Marruecos", "Francia",   "Colombia", "Ecuador", "Rumanía",
                            "Portugal", "Perú",     "Argentina", "Bolivia",  "Venezuela", "Alemania",
                            "Italia",  "China",     "Senegal",   "Cuba"};

const Words kEsStreets = {"C/ Mayor", "C/ Alcalá", "Avenida de la Constitución", "C/ Real",
                          "Paseo del Prado", "C/ Goya", "Avenida de América", "C/ Toledo",
                          "Plaza de España", "C/ Serrano", "C/ San Vicente", "Ronda de Valencia"};

const Words kEsMonths = {"enero", "febrero", "marzo",      "abril",   "mayo",      "junio",
                         "julio", "agosto",  "septiembre", "octubre", "noviembre", "diciembre"};

const Words kEsHospitals = {"Hospital Universitario La Paz", "Hospital Clínic",
                            "Hospital Gregorio Marañón", "Hospital Virgen del Rocío",
                            "Hospital de Cruces", "Hospital La Fe", "Hospital 12 de Octubre",
                            "Hospital Ramón y Cajal", "Hospital del Mar", "Hospital Miguel Servet",
                            "Hospital Clínico San Carlos", "Hospital de Basurto"};

const Words kEsProfessions = {"albañil",   "profesora", "enfermera", "agricultor", "camionero",
                              "abogado",   "cocinero",  "electricista", "pintor",  "minero",
                              "carpintero", "administrativa", "panadero", "fontanero", "peluquera",
                              "mecánico",  "conserje",  "pescador",  "jardinero", "maestra"};

const Words kEsInstitutions = {"Cruz Roja", "INSS", "Servicio Madrileño de Salud", "Cáritas",
                               "Guardia Civil", "Seguridad Social", "Servicio Andaluz de Salud",
                               "Osakidetza", "Instituto Nacional de Toxicología", "Policía Local",
                               "Mutua Universal", "Asepeyo"};

const Words kEsRelatives = {"madre", "padre", "hermano", "hermana", "hija", "hijo", "esposa",
                            "esposo", "abuela", "abuelo", "tío", "tía", "sobrino", "nieta"};

const Words kEsSex = {"varón", "mujer", "hombre", "Varón", "Mujer", "Hombre", "femenino", "masculino"};

const Words kEsTemplates = {
    "Paciente <SEXO_SUJETO_ASISTENCIA> de <EDAD_SUJETO_ASISTENCIA> que acude a urgencias del <HOSPITAL> .",
    "Nombre : <NOMBRE_SUJETO_ASISTENCIA> .",
    "NHC : <ID_SUJETO_ASISTENCIA> .",
    "NASS : <ID_ASEGURAMIENTO> .",
    "Domicilio : <CALLE> , <TERRITORIO> .",
    "Fecha de ingreso : <FECHAS> .",
    "Médico : <NOMBRE_PERSONAL_SANITARIO> . NC <ID_TITULACION_PERSONAL_SANITARIO> .",
    "Remitido desde el <CENTRO_SALUD> el <FECHAS> .",
    "Correo electrónico : <CORREO_ELECTRONICO> .",
    "Teléfono : <NUMERO_TELEFONO> . Fax : <NUMERO_FAX> .",
    "Natural de <PAIS> , trabaja como <PROFESION> .",
    "Acude acompañado de su <FAMILIARES_SUJETO_ASISTENCIA> .",
    "Antecedentes familiares : <FAMILIARES_SUJETO_ASISTENCIA> con diabetes .",
    "Derivado a <INSTITUCION> para seguimiento .",
    "Se contacta con <*> para informar .",
    "Valorado en <HOSPITAL> de <TERRITORIO> .",
    "<SEXO_SUJETO_ASISTENCIA> de <EDAD_SUJETO_ASISTENCIA> natural de <PAIS> .",
    "Alta el <FECHAS> con seguimiento en <CENTRO_SALUD> .",
    "Según <*> el paciente presenta dolor ."};

const Words kEsPhrases = {
    "Sin alergias medicamentosas conocidas .",
    "Presenta fiebre de tres días de evolución .",
    "Tensión arterial 130/80 , frecuencia cardiaca 72 .",
    "Se inicia tratamiento antibiótico empírico .",
    "La analítica muestra leucocitosis con neutrofilia .",
    "Abdomen blando y depresible , no doloroso a la palpación .",
    "Radiografía de tórax sin hallazgos .",
    "Buena evolución clínica .",
    "Se solicita tomografía computarizada abdominal .",
    "El paciente refiere dolor lumbar irradiado .",
    "Exploración neurológica normal .",
    "Se pauta paracetamol 1 g cada 8 horas .",
    "Hipertensión arterial en tratamiento .",
    "No hábitos tóxicos .",
    "Diabetes mellitus tipo 2 .",
    "Se decide ingreso para observación .",
    "Auscultación cardiopulmonar sin alteraciones .",
    "Afebril durante el ingreso .",
    "Se realiza biopsia de la lesión .",
    "El estudio histológico confirma el diagnóstico .",
    "Control en consultas externas .",
    "Saturación de oxígeno 96 % .",
    "Presenta buena tolerancia oral .",
    "Se recomienda reposo relativo ."};

}  // namespace

TemplateSpec sepr_like_spec(std::size_t documents) {
  TemplateSpec spec;
  spec.documents = documents;
  spec.language = Language::sv;
  spec.id_prefix = "sepr";
  spec.templates = kSvTemplates;
  spec.phrases = kSvPhrases;

  auto ages = generate(78, 11, [](Rng& rng) { return std::to_string(18 + rng.below(78)); });
  auto phones = generate(300, 12, [](Rng& rng) {
    static const Words prefixes = {"070-", "073-", "076-", "08-", "031-", "040-"};
    return prefixes[rng.below(prefixes.size())] + digits(rng, 7);
  });
  auto streets = generate(150, 13, [](Rng& rng) {
    return kSvStreets[rng.below(kSvStreets.size())] + " " + std::to_string(1 + rng.below(60));
  });
  Words locations = kSvTowns;
  locations.insert(locations.end(), streets.begin(), streets.end());
  auto full_dates = generate(400, 14, [](Rng& rng) {
    const auto year = 2010 + rng.below(14);
    const auto month = 1 + rng.below(12);
    const auto day = 1 + rng.below(28);
    if (rng.below(2) == 0) return std::to_string(year) + "-" + pad2(month) + "-" + pad2(day);
    return std::to_string(day) + " " + kSvMonths[month - 1] + " " + std::to_string(year);
  });
  auto date_parts = generate(200, 15, [](Rng& rng) {
    switch (rng.below(4)) {
      case 0:
        return std::to_string(1 + rng.below(28)) + " " + kSvMonths[rng.below(12)];
      case 1:
        return kSvMonths[rng.below(12)];
      case 2:
        return "vecka " + std::to_string(1 + rng.below(52));
      default:
        return std::to_string(1 + rng.below(28)) + "/" + std::to_string(1 + rng.below(12));
    }
  });
  Words units = kSvUnits;
  auto wards = generate(40, 16, [](Rng& rng) { return "avdelning " + std::to_string(1 + rng.below(90)); });
  units.insert(units.end(), wards.begin(), wards.end());
  auto centres = generate(30, 17, [](Rng& rng) {
    return "vårdcentralen " + kSvTowns[rng.below(kSvTowns.size())];
  });
  units.insert(units.end(), centres.begin(), centres.end());

  spec.classes = {
      {"First_Name", 0.20, kSvFirst},
      {"Last_Name", 0.15, kSvLast},
      {"Age", 0.05, ages},
      {"Phone_Number", 0.05, phones},
      {"Location", 0.10, locations},
      {"Full_Date", 0.15, full_dates},
      {"Date_Part", 0.10, date_parts},
      {"Health_Care_Unit", 0.12, units},
      {"Organization", 0.08, kSvOrgs},
  };
  return spec;
}

TemplateSpec meddocan_like_spec(std::size_t documents) {
  TemplateSpec spec;
  spec.documents = documents;
  spec.language = Language::es;
  spec.id_prefix = "meddocan";
  spec.templates = kEsTemplates;
  spec.phrases = kEsPhrases;
  spec.min_sentences = 3;
  spec.max_sentences = 8;

  auto names = generate(300, 21, [](Rng& rng) {
    return kEsFirst[rng.below(kEsFirst.size())] + " " + kEsLast[rng.below(kEsLast.size())] + " " +
           kEsLast[rng.below(kEsLast.size())];
  });
  auto staff = cross(kEsFirst, kEsLast, 150, 22);
  auto ages = generate(90, 23, [](Rng& rng) { return std::to_string(1 + rng.below(95)) + " años"; });
  auto dates = generate(400, 24, [](Rng& rng) {
    const auto year = 2005 + rng.below(18);
    const auto month = 1 + rng.below(12);
    const auto day = 1 + rng.below(28);
    if (rng.below(2) == 0) return pad2(day) + "/" + pad2(month) + "/" + std::to_string(year);
    return std::to_string(day) + " de " + kEsMonths[month - 1] + " de " + std::to_string(year);
  });
  auto streets = generate(150, 25, [](Rng& rng) {
    return kEsStreets[rng.below(kEsStreets.size())] + " " + std::to_string(1 + rng.below(120));
  });
  auto centres = generate(40, 26, [](Rng& rng) {
    return "Centro de Salud " + kEsCities[rng.below(kEsCities.size())];
  });
  auto phones = generate(200, 27, [](Rng& rng) { return "6" + digits(rng, 8); });
  auto faxes = generate(200, 28, [](Rng& rng) {
    return "9" + digits(rng, 1) + " " + digits(rng, 3) + " " + digits(rng, 2) + " " + digits(rng, 2);
  });
  auto mails = generate(200, 29, [](Rng& rng) {
    return text::to_lower(kEsFirst[rng.below(kEsFirst.size())]) + "." +
           text::to_lower(kEsLast[rng.below(kEsLast.size())]) + "@salud.es";
  });
  auto patient_ids = generate(300, 30, [](Rng& rng) { return digits(rng, 7); });
  auto insurance_ids = generate(300, 31, [](Rng& rng) { return "28" + digits(rng, 10); });
  auto licence_ids = generate(150, 32, [](Rng& rng) { return "28/" + digits(rng, 5); });

  spec.classes = {
      {"NOMBRE_SUJETO_ASISTENCIA", 0.08, names},
      {"EDAD_SUJETO_ASISTENCIA", 0.06, ages},
      {"SEXO_SUJETO_ASISTENCIA", 0.06, kEsSex},
      {"FAMILIARES_SUJETO_ASISTENCIA", 0.04, kEsRelatives},
      {"NOMBRE_PERSONAL_SANITARIO", 0.06, staff},
      {"FECHAS", 0.12, dates},
      {"PROFESION", 0.03, kEsProfessions},
      {"HOSPITAL", 0.06, kEsHospitals},
      {"CENTRO_SALUD", 0.04, centres},
      {"INSTITUCION", 0.04, kEsInstitutions},
      {"CALLE", 0.06, streets},
      {"TERRITORIO", 0.08, kEsCities},
      {"PAIS", 0.06, kEsCountries},
      {"NUMERO_TELEFONO", 0.03, phones},
      {"NUMERO_FAX", 0.02, faxes},
      {"CORREO_ELECTRONICO", 0.04, mails},
      {"ID_SUJETO_ASISTENCIA", 0.05, patient_ids},
      {"ID_ASEGURAMIENTO", 0.04, insurance_ids},
      {"ID_TITULACION_PERSONAL_SANITARIO", 0.03, licence_ids},
  };
  return spec;
}

TemplateSpec template_preset(const std::string& name, std::size_t documents) {
  if (name == "sepr") return sepr_like_spec(documents);
  if (name == "meddocan") return meddocan_like_spec(documents);
  throw ValidationError("unknown template preset '" + name + "' (expected sepr or meddocan)");
}

namespace {

/// Cumulative Zipf weights 1/(r+1)^s.
std::vector<double> zipf_cdf(std::size_t n, double s) {
  std::vector<double> cdf(n);
  double acc = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    acc += 1.0 / std::pow(static_cast<double>(r + 1), s);
    cdf[r] = acc;
  }
  return cdf;
}

std::size_t draw(Rng& rng, const std::vector<double>& cdf) {
  const double u = rng.uniform() * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

struct Slot {
  bool wildcard = false;
  std::size_t class_index = 0;
};

/// A template split into literal words and slots.
struct Compiled {
  std::vector<std::string> words;
  std::vector<std::optional<Slot>> slots;
};

}  // namespace

Corpus make_template_corpus(const TemplateSpec& spec, std::uint64_t seed) {
  if (spec.templates.empty() && spec.phrases.empty()) {
    throw ValidationError("template spec has neither templates nor phrases");
  }
  if (spec.min_sentences == 0 || spec.min_sentences > spec.max_sentences) {
    throw ValidationError("template spec needs 1 <= min_sentences <= max_sentences");
  }
  std::map<std::string, std::size_t> class_index;
  for (std::size_t i = 0; i < spec.classes.size(); ++i) class_index[spec.classes[i].name] = i;

  std::vector<bool> used(spec.classes.size(), false);
  bool wildcard_used = false;
  std::vector<Compiled> templates;
  for (const auto& t : spec.templates) {
    Compiled c;
    for (auto& w : text::split_words(t)) {
      if (w.size() > 2 && w.front() == '<' && w.back() == '>') {
        const std::string name = w.substr(1, w.size() - 2);
        if (name == "*") {
          wildcard_used = true;
          c.slots.push_back(Slot{true, 0});
        } else {
          auto it = class_index.find(name);
          if (it == class_index.end()) throw ValidationError("template uses unknown class '" + name + "'");
          used[it->second] = true;
          c.slots.push_back(Slot{false, it->second});
        }
        c.words.emplace_back();
      } else {
        c.slots.push_back(std::nullopt);
        c.words.push_back(std::move(w));
      }
    }
    templates.push_back(std::move(c));
  }

  std::vector<double> class_cdf;
  double acc = 0.0;
  for (std::size_t i = 0; i < spec.classes.size(); ++i) {
    if (wildcard_used && spec.classes[i].weight > 0.0) used[i] = true;
    acc += std::max(0.0, spec.classes[i].weight);
    class_cdf.push_back(acc);
  }
  if (wildcard_used && acc <= 0.0) throw ValidationError("wildcard slot with no positively weighted class");
  for (std::size_t i = 0; i < spec.classes.size(); ++i) {
    if (used[i] && spec.classes[i].lexicon.empty()) {
      throw ValidationError("class '" + spec.classes[i].name + "' is used but has an empty lexicon");
    }
  }

  std::vector<std::vector<std::vector<std::string>>> lexicons;
  std::vector<std::vector<double>> lexicon_cdf;
  for (const auto& c : spec.classes) {
    std::vector<std::vector<std::string>> entries;
    for (const auto& e : c.lexicon) entries.push_back(text::split_words(e));
    lexicons.push_back(std::move(entries));
    lexicon_cdf.push_back(zipf_cdf(c.lexicon.size(), spec.lexicon_skew));
  }
  std::vector<std::vector<std::string>> phrases;
  for (const auto& p : spec.phrases) phrases.push_back(text::split_words(p));

  std::set<std::string> label_set;
  for (std::size_t i = 0; i < spec.classes.size(); ++i) {
    if (used[i]) label_set.insert(spec.classes[i].name);
  }

  std::vector<Document> docs;
  docs.reserve(spec.documents);
  const std::size_t width = std::to_string(spec.documents).size();
  for (std::size_t d = 0; d < spec.documents; ++d) {
    Rng rng(derive_seed(seed, {hash_string("template"), d}));
    Document doc;
    std::string num = std::to_string(d);
    doc.id = spec.id_prefix + "-" + std::string(width - std::min(width, num.size()), '0') + num;
    doc.language = spec.language;
    const std::size_t n_sent =
        spec.min_sentences + rng.below(spec.max_sentences - spec.min_sentences + 1);
    for (std::size_t s = 0; s < n_sent; ++s) {
      const bool phrase = templates.empty() ||
                          (!phrases.empty() && rng.uniform() < spec.phrase_probability);
      if (phrase) {
        for (const auto& w : phrases[rng.below(phrases.size())]) {
          doc.tokens.push_back(w);
          doc.labels.emplace_back(kOutside);
        }
        continue;
      }
      const auto& t = templates[rng.below(templates.size())];
      for (std::size_t i = 0; i < t.words.size(); ++i) {
        if (!t.slots[i]) {
          doc.tokens.push_back(t.words[i]);
          doc.labels.emplace_back(kOutside);
          continue;
        }
        const std::size_t cls = t.slots[i]->wildcard ? draw(rng, class_cdf) : t.slots[i]->class_index;
        const auto& entry = lexicons[cls][draw(rng, lexicon_cdf[cls])];
        for (std::size_t k = 0; k < entry.size(); ++k) {
          doc.tokens.push_back(entry[k]);
          doc.labels.push_back((k == 0 ? "B-" : "I-") + spec.classes[cls].name);
        }
      }
    }
    docs.push_back(std::move(doc));
  }
  return Corpus(std::move(docs), std::move(label_set));
}

}  // namespace synthner
