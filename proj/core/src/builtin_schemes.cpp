#include "dirk/error.hpp"
#include "dirk/tableau.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <span>

namespace dirk {

namespace {

// Coefficients carry 16 significant digits; each literal is the correctly
// rounded binary64 value of the decimal string.

// DIRK(6,6)A: lower triangle of A row by row, then b.
constexpr double k_dirk66a[] = {
    3.337723370858640e-01,
    -2.690151875162680e-01, 5.763961719126690e-01,
    6.465901794486330e-01, -7.596332998405290e-01, 1.953520909703380e-01,
    -2.097669828629370e+00, 2.883892723603330e+00, -1.455782151279380e-01, 2.480362499547490e-01,
    2.420906658080530e+00, -3.267292599063710e+00, 6.936209681760170e-01, -1.659762595936020e-01, 8.224302221809330e-01,
    -3.194732205134400e+00, 3.979558967265820e+00, -8.506939116519650e-01, 1.904565908702810e-01, -7.514584732620520e-01, 8.134345159561560e-01,
    // b
    5.112077677339720e-02, -1.183679576669420e-01, 1.469625116542270e-01, 2.744717150475150e-01,
    4.503634617019080e-01, 1.954494924898950e-01,
};

// DIRK(8,6)SA: lower triangle of A row by row; b is the last row.
constexpr double k_dirk86sa[] = {
    8.251782134495020e-07,
    2.323042785576311e-01, 2.323034533769603e-01,
    7.915631150298842e-01, -4.761052598649181e-01, 7.361499316850002e-01,
    -1.267387934041245e+00, -2.904846772343544e-01, 5.881561230702676e-02, 1.547060089369948e+00,
    1.611947242540210e-02, 6.153854218815562e-02, 4.376289186677349e-03, 2.759189490978538e-01, 1.877597814907561e-01,
    -3.790414153592406e-02, -8.414346695630807e-02, 2.839755071523671e-02, 1.732858627491579e-01, -7.864218517417440e-02, 2.960707799337267e-01,
    3.922221298237860e+00, 1.956944402578163e+00, 1.353249372310851e+00, -2.448410512923494e+00, -2.648215548212344e+00, -1.215573251972103e+00, 1.726079965435451e-01,
    3.583478802595002e-01, -2.444943569597347e+00, -2.161661002544612e-01, -4.499164985562865e-01, 2.076028370700048e+00, 1.325678905601018e+00, 7.713505623865580e-02, 2.738359556088738e-01,
};

// DIRK(9,7)A: lower triangle of A row by row, then b.
constexpr double k_dirk97a[] = {
    1.933847521874120e-01,
    -2.962449109397610e-02, 1.058251200220380e-01,
    2.989079768813480e-01, 1.084620765766690e-01, 1.732496697097750e-01,
    -2.291706259689360e-02, 2.133389464376580e-01, -3.380634943827620e-02, 2.022519084682340e-01,
    -1.089788911358410e+00, 4.200902002088630e-01, -4.071929940429070e-01, 1.215937240150290e+00, 1.621557508046080e-01,
    6.696170106681510e-01, -3.787949715429550e-02, 4.485284662991430e-01, -7.086884467146880e-01, 3.387598767631370e-01, 1.655285063862880e-01,
    1.451544861121040e-01, 1.234558640425860e-01, -7.273963368678910e-02, 4.147634303484680e-01, -9.933550822173071e-02, -5.870493698382680e-02, 2.810610580052990e-01,
    -3.708656363806360e-01, 1.393338259467870e-01, -2.990993562075870e-01, 5.303992932510770e-01, -9.355605531261280e-02, -4.609734259264120e-02, 1.464223057286520e-01, 2.330242319377320e-01,
    1.673338215431530e-01, 2.140691287905210e-01, 2.797928747391330e-01, 1.068505599997420e-01, 3.313718028100840e-01, 8.937022036499120e-02, 7.574974474685670e-02, -3.756143049453640e-01, 5.553807597544880e-02,
    // b
    7.716918141765269e-02, 1.832530394005160e-01, 5.018125617448160e-02, 3.423815339263870e-01,
    3.881055369392400e-02, -3.086387039807090e-02, 2.952370883541170e-01, -1.084559349932030e-01,
    1.522871524241970e-01,
};

// DIRK(10,7)SA: lower triangle of A row by row; b is the last row.
// a(5,2) is the root of the order-2 condition with every other entry fixed. Copying
// a(9,6) into this slot breaks all conditions from order 2 up; this value satisfies
// them through order 7 to ~1e-16.
constexpr double k_dirk107sa[] = {
    2.910542959828886e-07,
    1.788378812978454e-01, 1.788375902432758e-01,
    1.057646740545220e-01, 5.369521543603267e-01, 1.702222956884409e-01,
    -4.096459510760666e-01, -3.598405740625575e-01, 2.832679582413700e-01, 1.823782211545968e-01,
    9.024152566114417e-02, -5.412335125221739e-02, 2.653662415234786e-02, 1.983356030762922e-02, 1.201191859436534e-01,
    -4.775671289579707e-01, -8.975991447558170e-02, 1.561942294119587e-01, -9.693278644647514e-02, -4.977668312124964e-02, 2.875959164323666e-01,
    -2.749657423652194e-01, 1.819099472495013e-01, 6.814228967119232e-02, -2.046343730367824e-01, 6.174538560515690e-01, 3.017903134207171e-01, 1.527157809415378e-01,
    5.197583913811032e-02, -1.955272446592811e-01, 3.610023508305035e-02, -1.239426825362421e-01, 2.772132063679332e-01, 2.061840251901543e-01, -5.378365550813805e-03, 2.735944024942539e-01,
    4.042260394180409e-02, 4.588544952502511e-01, 2.918036272783889e-01, -3.768512208794444e-02, 1.010451305475649e-01, 5.286275593343621e-02, -1.799399462700423e-01, 5.813808494210781e-02, 1.474383526107085e-01,
    1.604626959668502e-01, 5.929563417305183e-01, 4.930819384262880e-01, 1.670482801427728e-02, -7.235655397083071e-02, -2.889979490013322e-02, 7.515708130671475e-02, -1.099492823182740e-01, -2.987727801839358e-01, 1.716155259285254e-01,
};

// DIRK(13,8)A: lower triangle of A row by row, then b.
constexpr double k_dirk138a[] = {
    1.643663550989435e-01,
    -6.887680056020326e-02, 1.654873740601529e-01,
    1.535622330327359e-01, -3.129701578967866e-01, 1.881552825358055e-01,
    3.317446283280051e-01, 3.743911115873808e-01, -2.549230620606831e-01, 1.919740054620670e-01,
    2.764308076423002e-02, 2.044163602714508e-01, 8.525414608777496e-03, -4.865545713853562e-03, 1.129052113653034e-01,
    4.989926488581780e-02, 1.090667783496483e-01, 3.993236265347437e-02, 3.765093572434768e-02, 3.449834633271968e-01, 9.713096490596462e-02,
    5.473669046196631e-01, -3.378250060314901e-01, 6.949059378330771e-02, 3.837694904790580e-01, 3.998115051246402e-01, -7.269174756706592e-01, 4.563551994429690e-01,
    -3.075794534300858e-01, -5.000488320044485e-01, 7.458854975324971e-01, 1.658006045322788e+00, 2.139497929938004e-01, 2.752726927459812e-02, -1.273729154114386e+00, 4.139062323983639e-01,
    -9.861722478256395e-02, -1.737366621057325e-01, 1.683592439666856e-01, 1.085381929504977e+00, -2.125408284591870e-01, -3.026704703171034e-01, -7.837425977300005e-01, 2.189493851403608e-01, 2.629835798815074e-01,
    -1.039742420395638e+00, -3.793337489755645e-01, 4.043984749511084e-01, -3.828823551469046e-01, 1.949093855980034e-01, 1.397197937147523e+00, -6.131541861625970e-01, 3.938439943626619e-02, 1.198726481468041e+00, 1.543104523227209e-01,
    6.780635467673582e-01, -2.785807279539857e-01, 8.225619805275043e-03, 4.906485870098927e-01, 3.091403793339129e-01, -8.164096444872326e-01, 2.184088390624300e-01, 2.508484985513457e-02, -7.051702806975961e-02, -1.406880958630590e-02, 2.234205208296261e-01,
    -9.154774948860739e-02, 1.488168268931843e-01, -4.680507350111962e-02, -5.065910865097423e-01, 3.166075023628540e-01, 6.172918815582430e-01, 1.994663311012157e-01, -8.302131714061033e-02, 2.556188372145921e-01, 3.265803470126473e-02, 2.584939660943499e-03, 7.746031519319982e-02,
    1.612796306487523e+00, 7.473270770744567e+00, -7.851192427008590e+00, 2.124754703389033e+00, -3.491289136432755e+00, -5.456657876883784e-01, -3.343944236473962e+00, 3.302150624816929e-01, -2.171407394983957e-01, 8.374095987647487e-01, 3.420000830380791e+00, -1.609113031102608e+00, 1.129949042978166e+00,
    // b
    3.808871301251163e-27, 1.533125802071737e-01, 4.112692714337359e-02, -8.705744867384740e-02,
    3.236312727719691e-01, 4.114683136730083e-01, -2.013556474740147e-01, 3.458858414146847e-02,
    -3.301124039168490e-28, -3.242861102679333e-02, 1.603926772468385e-01, 1.963213816091595e-01,
    -2.961833577734979e-08,
};

// DIRK(15,8)SA: lower triangle of A row by row; b is the last row.
constexpr double k_dirk158sa[] = {
    1.289137864312432e-05,
    4.011941865161190e-01, 4.011812949316328e-01,
    -7.249707323995463e-03, 2.881904150500404e-13, 7.262584864009985e-03,
    1.505638337878644e-02, -1.139800933963630e-03, 5.666034252941995e-02, 8.251273537427864e-02,
    6.247286989495759e-03, -8.676133753298966e-03, 5.526170988996171e-02, 2.119695639150975e-01, 1.383512845289370e-01,
    -4.877831337283893e-02, -5.563303185475017e-02, -1.502485026750824e-01, -2.697949888384871e-01, 2.534098690727904e-01, 2.025513542669397e-01,
    -1.148860882615601e-02, -2.191084517280229e-02, -9.197650017749766e-02, -1.865745422230471e-01, 1.008225611814273e-01, 1.228844746762245e-01, 1.887217893774122e-01,
    -1.338611625778656e-01, -3.415530749585428e-03, -6.477025495526449e-02, -2.456897649686548e-01, 3.118031688196653e-02, 1.063001805767689e-02, 2.816029761710400e-01, 1.260670155374129e-01,
    3.572424505238698e-01, 3.103285334506913e-01, -2.914251753217418e-02, -1.090525072481513e-01, -4.434457683096458e-02, 2.701348517752341e-02, 3.845412093644123e-02, 1.206774530373550e-01, 1.310205627724471e-01,
    1.497598035891504e-01, 6.931333983530343e-02, 1.001223914189786e-01, 2.275322473152237e-01, -1.348249979512699e-01, -8.361156844854302e-02, 4.606104918711590e-02, -1.478331219941371e-01, -4.697765928898116e-02, 1.233652897922089e-01,
    7.718164871186016e-03, -6.617340512831714e-02, 7.326547958567060e-02, 1.394804025396982e-01, -4.794572639209942e-02, -4.319735644400197e-02, 5.961587231261601e-02, 1.672781919934854e-02, 6.664418859564088e-02, 1.222147637792680e-01, 1.050602825658516e-01,
    -2.902444248735656e-02, -1.902107721665948e-02, 2.231565312796241e-02, 1.226586640602985e-01, 1.712799732034434e-01, 1.445883779593425e-02, 6.379528047747672e-02, 3.549492400784994e-02, 1.410399764840212e-02, 5.530075727566013e-02, 1.164030516730018e-01, 9.606295566569932e-02,
    2.569655103283488e-02, 6.631604413548463e-03, 4.686199608162573e-02, 1.652169901935368e-01, 1.102232588985282e-01, -8.869420528291079e-03, 1.783389155021445e-02, 1.189090592516043e-02, 1.654714697855102e-02, 6.409688765843849e-02, 1.093477349060941e-01, 1.859824480973952e-01, 5.160695390506859e-02,
    3.280116452402984e-02, 1.922664998228620e-02, 5.712922813631068e-02, 2.269693848913651e-01, 1.402916528016510e-01, -1.195624033821731e-02, -1.310798504156696e-02, -2.258859432259270e-02, -1.941648686411041e-02, 4.408385051333097e-02, 7.750374241634632e-02, 2.414826741656902e-01, 7.145377582788361e-02, 4.026478840164178e-02,
    8.532400132228857e-03, 1.764060615626915e-04, 4.530593870344164e-02, 1.772147088986863e-01, 1.319215277008768e-01, -4.479040498378484e-03, 2.558779242849993e-02, 6.234381515854643e-04, -1.190720901829278e-04, 5.770176295507422e-02, 9.622951368933848e-02, 2.464635776941779e-01, -1.456522698279293e-03, 1.826527654422864e-01, 3.364480342908203e-02,
};
struct BuiltinEntry {
  const char* name;
  int stages;
  int order;
  bool stiffly_accurate;
  std::span<const double> packed;
};

constexpr std::array<BuiltinEntry, 6> kBuiltins{{
    {"DIRK(6,6)A", 6, 6, false, k_dirk66a},
    {"DIRK(8,6)SA", 8, 6, true, k_dirk86sa},
    {"DIRK(9,7)A", 9, 7, false, k_dirk97a},
    {"DIRK(10,7)SA", 10, 7, true, k_dirk107sa},
    {"DIRK(13,8)A", 13, 8, false, k_dirk138a},
    {"DIRK(15,8)SA", 15, 8, true, k_dirk158sa},
}};

constexpr std::size_t packed_size(int s, bool stiffly_accurate) {
  const auto tri = static_cast<std::size_t>(s) * (s + 1) / 2;
  return stiffly_accurate ? tri : tri + s;
}

static_assert(std::all_of(kBuiltins.begin(), kBuiltins.end(), [](const BuiltinEntry& e) {
  return e.packed.size() == packed_size(e.stages, e.stiffly_accurate);
}));

ButcherTableau unpack(const BuiltinEntry& e) {
  const int s = e.stages;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(s, s);
  Eigen::VectorXd b(s);
  std::size_t k = 0;
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j <= i; ++j) a(i, j) = e.packed[k++];
  }
  if (e.stiffly_accurate) {
    b = a.row(s - 1).transpose();
  } else {
    for (int j = 0; j < s; ++j) b(j) = e.packed[k++];
  }
  return ButcherTableau(e.name, e.order, std::move(a), std::move(b));
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return out;
}

}  // namespace

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& e : kBuiltins) v.emplace_back(e.name);
    return v;
  }();
  return names;
}

std::string scheme_alias(std::string_view canonical_name) {
  // DIRK(s,p)X -> dirk-s-p-x
  std::string out;
  for (char ch : canonical_name) {
    if (ch == '(' || ch == ',' || ch == ')') {
      if (!out.empty() && out.back() != '-') out.push_back('-');
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!out.empty() && out.back() == '-') out.pop_back();
  return out;
}

ButcherTableau load_builtin(std::string_view name) {
  const auto key = lowercase(name);
  for (const auto& e : kBuiltins) {
    if (key == lowercase(e.name) || key == scheme_alias(e.name)) return unpack(e);
  }
  throw NotFoundError("unknown scheme '" + std::string(name) + "'");
}

}  // namespace dirk
